# %% [markdown]
# # Three bolts, one probe sequence
#
# Bolts a, b, c sit on a ring and are tightened in the order a, c, b. Every
# bolt is brought to 10 kN (10000 N). Tightening c drops a to 8.25 kN;
# tightening b then drops a to 7.5 kN and c to 9 kN. Those readings are all
# we need to work out what to apply so every bolt finishes at 10 kN.

# %%

from boltseq import LoadHistory, LoadVector, compute_A, solve_initial_loads

# columns follow tightening order: a (1), c (3), b (2)
history = LoadHistory(
    [[10.0, 0.0, 0.0],
     [8.25, 10.0, 0.0],
     [7.5, 9.0, 10.0]],
    order=(1, 3, 2),
)

# %% Interaction matrix: change in each bolt per unit load applied later
A = compute_A(history)
print(A.a)

# %% Loads to apply so that every bolt ends at 10 kN
initial = solve_initial_loads(A, LoadVector.uniform(3, 10.0))
for bolt, name in ((1, "a"), (3, "c"), (2, "b")):
    print(f"bolt {name}: apply {initial[bolt] * 1000:.0f} N")

# %% Forward check: final = A @ initial
print(A.a @ initial.in_order(A.order))
