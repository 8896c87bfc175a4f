"""Regenerates the numeric fixtures in this directory (seeded)."""
import numpy as np

rng = np.random.default_rng(7)


def save(name, header, values):
    np.savetxt(name, values, delimiter=",", header=",".join(header), comments="", fmt="%.17g")


# Three AR(1) chains of 200 draws; theta1 is positive.
m, chains = 600, 3
theta = np.empty((m, 2))
chain = np.repeat(np.arange(chains), m // chains)
for c in range(chains):
    x = np.zeros(2)
    for t in range(m // chains):
        x = 0.6 * x + rng.normal(size=2) * np.sqrt(1 - 0.36)
        theta[c * (m // chains) + t] = x
theta[:, 0] = 1.0 + theta[:, 0]
theta[:, 1] = np.exp(0.3 * theta[:, 1])
save("posterior_samples.csv", ["theta0", "theta1", "chain"], np.column_stack([theta, chain]))

ref_post = np.column_stack([-(theta[:, 0] - 1.0), -2.0 / theta[:, 1] + 1.0])
cand_post = ref_post + np.column_stack([0.3 + 0.1 * theta[:, 0], -0.2 * np.ones(m)])
save("ref_post_scores.csv", ["s0", "s1"], ref_post)
save("cand_post_scores.csv", ["s0", "s1"], cand_post)

ref_loss = rng.normal(size=(m, 2))
cand_loss = ref_loss * 1.1
save("ref_loss_grad.csv", ["g0", "g1"], ref_loss)
save("cand_loss_grad.csv", ["g0", "g1"], cand_loss)
ref_prior = np.column_stack([-theta[:, 0] / 25.0, -2.0 * theta[:, 1] / (1.0 + theta[:, 1] ** 2)])
cand_prior = np.column_stack([-(theta[:, 0] - 0.5) / 4.0, -3.0 / theta[:, 1] + 1.0 / theta[:, 1] ** 2])
save("ref_prior_scores.csv", ["p0", "p1"], ref_prior)
save("cand_prior_scores.csv", ["p0", "p1"], cand_prior)

# Uniform-box posterior draws for the copula search.
u = rng.uniform(0.01, 0.99, size=(5000, 2))
save("copula_uniform.csv", ["u0", "u1"], u)
