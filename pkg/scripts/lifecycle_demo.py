"""Run full license lifecycles against an in-memory ledger and time each step.

    python3 scripts/lifecycle_demo.py --runs 20 --seed 7
"""

import argparse
import random
import statistics
import time
from collections import defaultdict

from citadel.crypto import gen_static_keys
from citadel.ledger import Ledger, LedgerConfig
from citadel.protocol import (
    License,
    gen_sp_keys,
    grant_service,
    issue_license,
    request_service,
    send_license_request,
    use_license,
)
from citadel.wallet import Wallet


def lifecycle(ledger, sp, rng, timings):
    gas = ledger.config.gas_fee
    tree, backend = ledger.notes_tree, ledger.backend
    user = Wallet(gen_static_keys(rng), height=ledger.height)
    ledger.faucet(user.keys.public, 100, rng)
    user.sync(ledger)
    attr, c = rng.randrange(1, 2 ** 32), rng.randrange(2 ** 64)

    t = time.perf_counter()
    tx, _ = send_license_request(user, sp.keys.public, 10, gas, tree, backend, rng)
    assert ledger.submit_tx(tx)
    sp.sync(ledger)
    user.sync(ledger)
    timings["request"].append(time.perf_counter() - t)

    t = time.perf_counter()
    rec = max(sp.requests.values(), key=lambda r: r.pos)
    tx, _ = issue_license(sp.sp, sp, rec.request, attr, gas, tree, backend, rng)
    assert ledger.submit_tx(tx)
    sp.sync(ledger)
    timings["issue"].append(time.perf_counter() - t)

    t = time.perf_counter()
    user.sync(ledger)
    held = max(user.licenses.values(), key=lambda r: r.pos)
    lic = License(held.note, held.payload, held.pos)
    timings["fetch"].append(time.perf_counter() - t)

    t = time.perf_counter()
    tx, sc = use_license(user, lic, c, sp.sp.public, gas, tree, backend, rng)
    receipt = ledger.submit_tx(tx)
    assert receipt, receipt.reject_reason
    sp.sync(ledger)
    timings["use"].append(time.perf_counter() - t)

    t = time.perf_counter()
    grant = grant_service(sp.sp, request_service(tx.tx_hash, sp.sp.lic_pk, attr, c, sc), ledger)
    timings["grant"].append(time.perf_counter() - t)
    return bool(grant)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--runs", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--sps", type=int, default=3)
    args = ap.parse_args(argv)

    rng = random.Random(args.seed)
    ledger = Ledger(LedgerConfig())
    sps = []
    for _ in range(args.sps):
        sp = Wallet.for_sp(gen_sp_keys(rng))
        ledger.faucet(sp.keys.public, 50, rng)
        sp.sync(ledger)
        sps.append(sp)

    timings = defaultdict(list)
    start = time.perf_counter()
    granted = sum(lifecycle(ledger, rng.choice(sps), rng, timings) for _ in range(args.runs))
    total = time.perf_counter() - start

    print(f"{granted}/{args.runs} lifecycles granted in {total:.2f} s "
          f"({total / args.runs * 1000:.0f} ms each, ledger height {ledger.height})")
    for step, xs in timings.items():
        print(f"  {step:8s} median {statistics.median(xs) * 1000:7.1f} ms   max {max(xs) * 1000:7.1f} ms")
    return 0 if granted == args.runs else 1


if __name__ == "__main__":
    raise SystemExit(main())
