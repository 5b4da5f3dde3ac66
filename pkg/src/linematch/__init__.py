"""Simulation and verification toolkit for online matching on the segment [0, 1].

Servers sit at fixed locations in [0, 1], requests arrive one at a time and
must be matched immediately and irrevocably; the cost of a match is the
distance between request and server.  The package provides the online
policies (greedy, hierarchical greedy, zero-threshold), exact offline
optimum, instance generators, hybrid-pair couplings, the gap Markov chain,
and experiment sweeps, plus a CLI wrapping all of it.
"""

__version__ = "0.1.0"
