"""Private NFT notes, licenses and a simulated ledger.

Submodules:

* ``jubjub``, ``hashing``, ``crypto``: curve arithmetic, the sponge hash,
  commitments, key derivation, Schnorr signatures and note encryption;
* ``merkle``: the note tree;
* ``notes``, ``tx``: the note model and the transaction relation;
* ``protocol``: the license lifecycle and the license relation;
* ``ledger``: the single-node ledger simulation;
* ``wallet``, ``cli``: the command-line driver.
"""

__version__ = "0.1.0"
