"""A one-dimensional CA that simulates the XOR rule colony by colony.

Each simulated cell becomes a colony of Q = 32 cells. One work period of U
steps copies neighbor bits through mailboxes, lets an agent look up the
rule table stored in the colony, and writes the new bit. Writes xor.ppm.
"""

from selfsim import ca
from selfsim.render import render_diagram

program = ca.rule_table_program(ca.xor_rule, 1)
rule, coding = ca.build_simulator(program, 1, 32)
print(f"Q = {rule.q}, U = {rule.u} (U_min = {ca.u_min(program, 1, 32)})")

x = [1, 0, 0, 1, 0]
rows = ca.spacetime(rule, ca.encode_config(coding, x), rule.u)
print("x       =", x)
print("after U =", ca.decode_config(coding, rows[-1]))
print("psi(x)  =", ca.apply_target(ca.table_of(program, 1), x, 1))
with open("xor.ppm", "wb") as f:
    f.write(render_diagram(rows))

xs = ca.bulking_test_set(range(3, 6), 1, random_count=5, random_width=16, seed=0)
print(ca.verify_bulking(rule, coding, program, xs).to_text())
