"""Cell-free deployment geometry, association, and Rayleigh channel sampling.

Geometry convention: M access points (APs) with N antennas each sit on a square
grid; K single-antenna user terminals (UEs) fall uniformly over the union of
discs around the APs and are served by every AP within the serving radius.
Channels are flat Rayleigh with distance-based path loss.
"""

import dataclasses
import hashlib
import json
import math
import os

import numpy as np

# deployment constants (meters / dB)
DEFAULT_ISD = 400.0
DISC_RADIUS = 400.0 / math.sqrt(3.0)
SERVE_RADIUS = 300.0
DEFAULT_EDGE_SNR_DB = 10.0
DEFAULT_POWER = 1.0

PL_OFFSET_DB = 13.54
PL_SLOPE_DB = 39.08


def place_aps(m_aps, isd=DEFAULT_ISD):
    """AP coordinates on a ceil(sqrt(M)) x ceil(sqrt(M)) grid, spacing isd.

    Only the first m_aps cells (row-major) are occupied and the occupied
    cells' center of mass sits at the origin. Returns (M, 2) float array.
    """
    if m_aps < 1:
        raise ValueError("m_aps must be >= 1")
    side = math.ceil(math.sqrt(m_aps))
    cells = np.arange(m_aps)
    rows, cols = cells // side, cells % side
    pos = np.stack([cols * isd, rows * isd], axis=1).astype(float)
    return pos - pos.mean(axis=0)


def sample_ues(ap_positions, n_ues, rng, radius=DISC_RADIUS):
    """Sample n_ues points uniformly over the union of discs around the APs.

    Rejection sampling over the union's bounding box keeps the density uniform
    where discs overlap. Returns (K, 2) float array.
    """
    ap = np.asarray(ap_positions, dtype=float)
    lo = ap.min(axis=0) - radius
    hi = ap.max(axis=0) + radius
    out = np.empty((n_ues, 2))
    have = 0
    while have < n_ues:
        # acceptance ratio >= pi r^2 / box area, bounded away from 0
        cand = rng.uniform(lo, hi, size=(max(2 * (n_ues - have), 8), 2))
        d2 = ((cand[:, None, :] - ap[None, :, :]) ** 2).sum(axis=2)
        keep = cand[(d2 <= radius * radius).any(axis=1)]
        take = min(len(keep), n_ues - have)
        out[have:have + take] = keep[:take]
        have += take
    return out


def associate(ap_positions, ue_positions, radius=SERVE_RADIUS):
    """Binary association matrix D (K, M): 1 iff distance <= radius (inclusive)."""
    ap = np.asarray(ap_positions, dtype=float)
    ue = np.asarray(ue_positions, dtype=float)
    dist = np.sqrt(((ue[:, None, :] - ap[None, :, :]) ** 2).sum(axis=2))
    return (dist <= radius).astype(float)


def path_loss_db(d3d):
    """Distance-based path loss in dB; distance clamped below at 1 m."""
    d = np.maximum(np.asarray(d3d, dtype=float), 1.0)
    return PL_OFFSET_DB + PL_SLOPE_DB * np.log10(d)


def channel_gain(d3d):
    """Linear large-scale power gain 10^(-PL/10)."""
    return 10.0 ** (-path_loss_db(d3d) / 10.0)


def noise_power(p_budget, edge_snr_db, edge_distance=DISC_RADIUS):
    """Noise power calibrated so a cell-edge UE sees the requested SNR.

    delta^2 = P * gain(edge_distance) / 10^(edge_snr_db/10).
    """
    if p_budget <= 0:
        raise ValueError("p_budget must be positive")
    return p_budget * channel_gain(edge_distance) / 10.0 ** (edge_snr_db / 10.0)


@dataclasses.dataclass
class Scenario:
    """One deployment: geometry, association, power budget, noise power."""

    ap_positions: np.ndarray   # (M, 2)
    ue_positions: np.ndarray   # (K, 2)
    assoc: np.ndarray          # (K, M) of {0.0, 1.0}
    power_budget: float
    noise_power: float
    n_antennas: int

    @property
    def n_ues(self):
        return self.assoc.shape[0]

    @property
    def n_aps(self):
        return self.assoc.shape[1]


def make_scenario(n_ues, n_aps, n_antennas, rng, p_budget=DEFAULT_POWER,
                  edge_snr_db=DEFAULT_EDGE_SNR_DB, isd=DEFAULT_ISD):
    """Draw one random deployment with the default geometry rules."""
    ap = place_aps(n_aps, isd)
    ue = sample_ues(ap, n_ues, rng)
    return Scenario(
        ap_positions=ap,
        ue_positions=ue,
        assoc=associate(ap, ue),
        power_budget=float(p_budget),
        noise_power=float(noise_power(p_budget, edge_snr_db)),
        n_antennas=int(n_antennas),
    )


def sample_channel(scenario, rng):
    """Rayleigh channel tensor h of shape (K, M, N).

    h_km = sqrt(g_km) * e_km with g_km the large-scale gain and e_km i.i.d.
    circularly symmetric complex Gaussian, unit variance per entry.
    """
    ap, ue = scenario.ap_positions, scenario.ue_positions
    n = scenario.n_antennas
    dist = np.sqrt(((ue[:, None, :] - ap[None, :, :]) ** 2).sum(axis=2))
    amp = np.sqrt(channel_gain(dist))  # (K, M)
    k_ues, m_aps = dist.shape
    e = (rng.standard_normal((k_ues, m_aps, n))
         + 1j * rng.standard_normal((k_ues, m_aps, n))) / math.sqrt(2.0)
    return amp[:, :, None] * e


def masked_channels(h, assoc):
    """Split h into the served part d*h and the complementary (1-d)*h part."""
    d = np.asarray(assoc, dtype=float)[:, :, None]
    h = np.asarray(h)
    return d * h, (1.0 - d) * h


def reconstruct_assoc(h_served, h_unserved):
    """Recover D from the masked split as ||served|| / ||served+unserved||.

    0/0 is defined as 0 (an exactly-zero channel block carries no association
    information; only arises for degenerate inputs).
    """
    num = np.linalg.norm(h_served, axis=2)
    den = np.linalg.norm(h_served + h_unserved, axis=2)
    out = np.zeros_like(num)
    nz = den > 0
    out[nz] = num[nz] / den[nz]
    return out


def stack_channel(h):
    """(K, M, N) tensor -> (N*M, K) matrix, AP blocks stacked, n fastest."""
    k_ues, m_aps, n = h.shape
    return h.transpose(1, 2, 0).reshape(m_aps * n, k_ues)


def unstack_channel(mat, m_aps, n_antennas):
    """Inverse of stack_channel."""
    k_ues = mat.shape[1]
    return mat.reshape(m_aps, n_antennas, k_ues).transpose(2, 0, 1)


# ---------------------------------------------------------------------------
# Dataset container and the "CFDS v1" on-disk format: one JSON header line,
# then per sample the association bytes (K*M of 0/1) followed by the channel
# tensor as little-endian complex128, k-major then m then n.
# ---------------------------------------------------------------------------

CFDS_VERSION = "CFDS v1"


@dataclasses.dataclass
class Dataset:
    """A batch of i.i.d. deployment samples sharing (K, M, N, P, noise)."""

    h: np.ndarray       # (S, K, M, N) complex128
    assoc: np.ndarray   # (S, K, M) float64 of {0, 1}
    power_budget: float
    noise_power: float

    def __len__(self):
        return self.h.shape[0]

    @property
    def shape_kmn(self):
        return self.h.shape[1], self.h.shape[2], self.h.shape[3]

    def sample(self, i):
        return self.h[i], self.assoc[i]

    def digest(self):
        """Content digest over the canonical serialized form."""
        return hashlib.sha256(serialize_dataset(self)).hexdigest()


def generate_dataset(count, n_ues, n_aps, n_antennas, seed,
                     p_budget=DEFAULT_POWER, edge_snr_db=DEFAULT_EDGE_SNR_DB,
                     isd=DEFAULT_ISD):
    """Generate `count` independent samples (fresh UE drop + Rayleigh draw each).

    Each sample uses its own child seed spawned from `seed`, so generation
    order cannot affect any individual sample.
    """
    children = np.random.SeedSequence(seed).spawn(count)
    h = np.empty((count, n_ues, n_aps, n_antennas), dtype=complex)
    assoc = np.empty((count, n_ues, n_aps))
    delta2 = noise_power(p_budget, edge_snr_db)
    for i, child in enumerate(children):
        rng = np.random.default_rng(child)
        sc = make_scenario(n_ues, n_aps, n_antennas, rng,
                           p_budget=p_budget, edge_snr_db=edge_snr_db, isd=isd)
        h[i] = sample_channel(sc, rng)
        assoc[i] = sc.assoc
    return Dataset(h=h, assoc=assoc, power_budget=float(p_budget),
                   noise_power=float(delta2))


def serialize_dataset(ds):
    """Encode a Dataset to CFDS v1 bytes."""
    count = len(ds)
    k_ues, m_aps, n = ds.shape_kmn
    header = {
        "version": CFDS_VERSION,
        "K": k_ues,
        "M": m_aps,
        "N": n,
        "P": ds.power_budget,
        "noise_power": ds.noise_power,
        "count": count,
        "dtype": "c128",
        "ordering": "k-major then m then n",
    }
    parts = [json.dumps(header).encode("utf-8"), b"\n"]
    for i in range(count):
        parts.append(ds.assoc[i].astype(np.uint8).tobytes())
        parts.append(ds.h[i].astype("<c16").tobytes())
    return b"".join(parts)


def deserialize_dataset(blob):
    """Decode CFDS v1 bytes back to a Dataset."""
    nl = blob.index(b"\n")
    header = json.loads(blob[:nl].decode("utf-8"))
    if header.get("version") != CFDS_VERSION:
        raise ValueError("unsupported dataset version: %r" % header.get("version"))
    k_ues, m_aps, n = header["K"], header["M"], header["N"]
    count = header["count"]
    d_bytes = k_ues * m_aps
    h_bytes = k_ues * m_aps * n * 16
    payload = blob[nl + 1:]
    if len(payload) != count * (d_bytes + h_bytes):
        raise ValueError("dataset payload length mismatch")
    h = np.empty((count, k_ues, m_aps, n), dtype=complex)
    assoc = np.empty((count, k_ues, m_aps))
    off = 0
    for i in range(count):
        assoc[i] = np.frombuffer(payload, dtype=np.uint8, count=d_bytes,
                                 offset=off).reshape(k_ues, m_aps)
        off += d_bytes
        h[i] = np.frombuffer(payload, dtype="<c16", count=k_ues * m_aps * n,
                             offset=off).reshape(k_ues, m_aps, n)
        off += h_bytes
    return Dataset(h=h, assoc=assoc, power_budget=float(header["P"]),
                   noise_power=float(header["noise_power"]))


def save_dataset(ds, path):
    """Write CFDS v1 atomically (temp file + rename)."""
    blob = serialize_dataset(ds)
    tmp = path + ".tmp"
    with open(tmp, "wb") as f:
        f.write(blob)
    os.replace(tmp, path)


def load_dataset(path):
    with open(path, "rb") as f:
        return deserialize_dataset(f.read())
