"""Two 2x2 systems where only the first state is observed.

With a basis that mixes observable and unobservable directions, greedy
controls leave W_hat singular and identification cannot be certified. The
basis built from the observability matrix gives a certified answer with two
controls.
"""
import numpy as np

from greedy_id import AdmissibleSet, gr_run, identify, ogr_run, simulate_measurements, w_hat_from_controls
from greedy_id.harness import BAD_NULL_DIRECTIONS, EXAMPLE_B_TRUE, bad_example_system, good_example_system

np.set_printoptions(precision=4, suppress=True)

bad = bad_example_system()
res = gr_run(bad, AdmissibleSet())
W = w_hat_from_controls(bad, res.controls)
print("bad basis: W_hat after GR\n", W)
print("W_hat applied to the null directions:", np.abs(W @ BAD_NULL_DIRECTIONS.T).max())
ident = identify(bad, res.selected, res.controls, simulate_measurements(bad, EXAMPLE_B_TRUE, res.controls))
print("alpha =", ident.alpha, "certified:", ident.certified_unique)
print(ident.apriori_error_note)

good = good_example_system()
res = ogr_run(good)
ident = identify(good, res.selected, res.controls, simulate_measurements(good, EXAMPLE_B_TRUE, res.controls))
print("\nobservability basis: OGR selected", res.selected, "and stopped:", res.stop_reason)
print("alpha =", ident.alpha, "certified:", ident.certified_unique)
print("recovered observable part of B:\n", good.combine(ident.alpha, res.selected))
