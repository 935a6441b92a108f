"""
hetcell - Wi-Fi / LTE 統合セル シミュレータ

Deterministic discrete-event simulation of one Wi-Fi cell whose clients
may also hold an LTE link, with standard, loose, tight and hybrid
integration modes and an analytic DCF saturation oracle.
"""

__version__ = "1.0.0"
