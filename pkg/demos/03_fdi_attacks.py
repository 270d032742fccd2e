"""False-data injection on the secondary control channels.

An attacker who can scale the voltage feedback entering DG1's controller
drives the whole consensus layer off the reference.  Two attack shapes:

    nonperiodic  h(u) = u (1 + alpha)               constant bias
    periodic     h(u) = u (1 + beta sin(omega t))   sustained oscillation

Both start at t = 2 s, well after the system has settled.
"""

import numpy as np

from mgres import builtin_scenario, compute_metrics, run_scenario

for name in ("default-nonperiodic", "default-periodic"):
    trace = run_scenario(builtin_scenario(name))
    m = compute_metrics(trace)
    print(f"--- {name} (baseline controller) ---")
    print(f"  attack starts at t = {m.attack_start:.3f} s")
    i_pre = np.searchsorted(trace.t, 1.99)
    print(f"  v1 just before:   {trace.dg['v'][i_pre, 0]:.4f} pu")
    print(f"  v1 at end of run: {trace.dg['v'][-1, 0]:.4f} pu")
    print(f"  post-attack mean |v1 - v*|: {m.eps_v_post_mean:.4f} pu")
    print(f"  post-attack ripple:         {m.voltage_ripple:.4f} pu")
    print()

print("the constant-gain attack pushes DG1 far outside the 2% band, and the")
print("sinusoidal one leaves a standing 60 Hz ripple -- the baseline consensus")
print("integrator trusts whatever arrives on the channel.")
