"""
Rate planning for a fixed net rate
==================================

For a 200 Gbit/s net target with 6.7% FEC overhead, how much entropy must a
PAM-8 source carry at each symbol rate, and how does the shaped source
compare with the uniform PAM-4/6/8 options?
"""
from imddsim import RunConfig, plan_table

###############################################################################
# Shaped PAM-8: the entropy drops as the symbol rate climbs, and the
# overhead of shaping (the unused share of the 3 bit label) grows with it.
rows = plan_table(RunConfig(modulation="pam8", shaping="cap"), [75.0, 80.0, 85.0, 90.0])
print(f"{'GBd':>5} {'H [bit]':>9} {'nu cap':>8} {'nu cup':>8} {'PS OH':>7}")
for r in rows:
    print(f"{r['symbol_rate_gbd']:5.0f} {r['entropy']:9.4f} {r['nu_cap']:8.4f} {r['nu_cup']:8.4f} {r['ps_overhead']:7.4f}")

###############################################################################
# Uniform formats have a single operating point each.
for mod, rs in (("pam4", 107.0), ("pam6", 83.0), ("pam8", 72.0)):
    (r,) = plan_table(RunConfig(modulation=mod, symbol_rate=rs))
    print(f"{mod} @ {rs:g} GBd -> {r['net_rate_gbps']:.2f} Gbit/s net")
