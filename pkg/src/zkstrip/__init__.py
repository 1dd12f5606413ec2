"""Pseudospectral simulator and verification harness for generalized ZK equations on a strip."""
