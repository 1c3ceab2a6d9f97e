"""From a zipped LTL body to the co-Buchi automaton used by the checker."""
import json

from hyperstrat.automata import dualize_to_ucw, ltl_to_nba, ucw_accepts_lasso
from hyperstrat.hyperltl import LassoTrace, negate_nnf, parse_formula, zip_formula

f = parse_formula("forall p. forall q. G (a[p] <-> a[q])")
body = zip_formula(f.body, f.variables)
print("zipped body:", body)

ucw = dualize_to_ucw(ltl_to_nba(negate_nnf(body)))
print(f"UCW: {ucw.num_states} states, rejecting {sorted(ucw.rejecting)}")
print(json.dumps(ucw.to_json(), indent=None)[:300], "...")

same = LassoTrace((), (frozenset({"a@1", "a@2"}), frozenset()))
diff = LassoTrace((frozenset({"a@1"}),), (frozenset(),))
print("agreeing pair accepted:", ucw_accepts_lasso(ucw, same))
print("disagreeing pair accepted:", ucw_accepts_lasso(ucw, diff))
