"""
The root package. This package includes the network model, the moment relaxation hierarchies,
the SDP solver, the order-escalation loop and the command-line interface.
"""
