"""
Simulation services.

masking and commitment implement the cryptographic primitives, consensus and
ledger the miners' chain, netsim the event loop, protocol the election itself,
and anonymity plus security_suite the analyses run against it.
"""
