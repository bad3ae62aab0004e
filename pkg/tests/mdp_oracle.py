"""Fixed 2-state / 2-action deterministic MDP and its value-iteration
oracle, shared by the tabular and DQN convergence tests."""

import numpy as np

# transitions T[s][a] -> s', rewards R[s][a]; margins are wide enough that
# the greedy policy is unambiguous
TRANSITIONS = ((1, 0), (1, 0))
REWARDS = ((0.8, 0.0), (0.1, 0.6))
GAMMA = 0.95


def mdp_step(s, a):
    return TRANSITIONS[s][a], REWARDS[s][a]


def value_iteration(gamma=GAMMA, tol=1e-9):
    """Q* for the fixed MDP, iterated to sup-norm tolerance tol."""
    Q = np.zeros((2, 2))
    while True:
        Q_new = np.empty_like(Q)
        for s in range(2):
            for a in range(2):
                s2, r = mdp_step(s, a)
                Q_new[s, a] = r + gamma * Q[s2].max()
        if np.max(np.abs(Q_new - Q)) < tol:
            return Q_new
        Q = Q_new
