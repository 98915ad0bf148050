"""Shared builders for the test suite."""

import math

import numpy as np

from qssrate.protocol import ChannelParams, GroupSpec, ProtocolConfig, channel_params


def two_groups(n1, n2, eta=(1.0, 1.0), omega=(1.0, 1.0), mu=10.0, tau=1.0, xi=1.0, total=None, dummies=(0, 0)):
    groups = tuple(GroupSpec(n, ChannelParams(e, w), None, d) for n, e, w, d in zip((n1, n2), eta, omega, dummies))
    return ProtocolConfig(groups, mu=mu, tau=tau, xi=xi, total_users=total)


def random_fh_config(rng, max_users=6, groups=(2, 3), taus=(1.0, 0.98), mu=(1.0, 100.0)):
    m = int(rng.choice(groups))
    n = int(rng.integers(m, max_users + 1))
    cuts = sorted(rng.choice(np.arange(1, n), m - 1, replace=False))
    sizes = np.diff([0, *cuts, n])
    gs = tuple(GroupSpec(int(s), ChannelParams(float(rng.uniform(0.05, 1.0)), float(rng.uniform(1.0, 1.3))))
               for s in sizes)
    return ProtocolConfig(gs, mu=float(rng.uniform(*mu)), tau=float(rng.choice(taus)))


def n5_conditional_blocks(mu, eta1, eta2, omega1, omega2):
    """Reference 10x10 conditional CM for N=5 with groups of 2 and 3 users."""
    p1 = channel_params(mu, ChannelParams(eta1, omega1))
    p2 = channel_params(mu, ChannelParams(eta2, omega2))
    x1, x2, y, z1, z2 = p1.x, p2.x, mu, p1.z, p2.z

    def lam(a, b):
        return a * x1 + b * x2

    A = y * np.eye(2) - np.diag([lam(3, 1) / (x1 * lam(3, 2)), 1 / lam(2, 3)]) * z1 ** 2
    B = y * np.eye(2) - np.diag([2 * lam(1, 1) / (x2 * lam(3, 2)), 1 / lam(2, 3)]) * z2 ** 2
    C = np.diag([x2 / (x1 * lam(3, 2)), -1 / lam(2, 3)]) * z1 ** 2
    D = np.diag([x1 / (x2 * lam(3, 2)), -1 / lam(2, 3)]) * z2 ** 2
    E = np.diag([1 / lam(3, 2), -1 / lam(2, 3)]) * z1 * z2
    layout = [["A", "C", "E", "E", "E"],
              ["C", "A", "E", "E", "E"],
              ["E", "E", "B", "D", "D"],
              ["E", "E", "D", "B", "D"],
              ["E", "E", "D", "D", "B"]]
    blocks = {"A": A, "B": B, "C": C, "D": D, "E": E}
    return np.block([[blocks[k] for k in row] for row in layout])


def n5_input_blocks(mu, eta1, eta2, omega1, omega2):
    """Reference Upsilon (without the Z factor) and Xi (without the I factor) for N=5, (2, 3)."""
    p1 = channel_params(mu, ChannelParams(eta1, omega1))
    p2 = channel_params(mu, ChannelParams(eta2, omega2))
    x1, x2, z1, z2 = p1.x, p2.x, p1.z, p2.z
    s = math.sqrt

    def lam(a, b):
        return a * x1 + b * x2

    ups = np.array([
        [z1 / s(5), -z1 / s(2), -z1 / s(6), -z1 / (2 * s(3)), -z1 / (2 * s(5))],
        [z1 / s(5), z1 / s(2), -z1 / s(6), -z1 / (2 * s(3)), -z1 / (2 * s(5))],
        [z2 / s(5), 0, s(2 / 3) * z2, -z2 / (2 * s(3)), -z2 / (2 * s(5))],
        [z2 / s(5), 0, 0, s(3) / 2 * z2, -z2 / (2 * s(5))],
        [z2 / s(5), 0, 0, 0, 2 * z2 / s(5)],
    ])
    L = lam(1, -1)
    xi = np.array([
        [lam(2, 3) / 5, 0, -s(2 / 15) * L, -L / s(15), -L / 5],
        [0, lam(1, 0), 0, 0, 0],
        [-s(2 / 15) * L, 0, lam(1, 2) / 3, L / (3 * s(2)), L / s(30)],
        [-L / s(15), 0, L / (3 * s(2)), lam(1, 5) / 6, L / (2 * s(15))],
        [-L / 5, 0, L / s(30), L / (2 * s(15)), lam(1, 9) / 10],
    ])
    return ups, xi
