"""
Named model presets, JSON config loading and random enumerable models.

Usage:
    from scripts.models.presets import load_model

    model = load_model("two-coin")              # named preset
    model = load_model(Path("my_model.json"))   # validated against schema/model_config.schema.json
"""
from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any, Callable, Dict, Union

import numpy as np

from scripts.chains.serialize import SCHEMA_DIR, validation_errors
from scripts.errors import ConfigError
from scripts.models.pm_core import EnumerableLatentModel

logger = logging.getLogger(__name__)

MODEL_SCHEMA = SCHEMA_DIR / "model_config.schema.json"
CONFIG_DIR = Path(__file__).resolve().parent.parent.parent / "data" / "config"

# latent coin bias per theta, observation likelihood per z
COIN_BIAS = (0.2, 0.5, 0.8)
OBSERVATION_LIKELIHOOD = (0.3, 0.9)


def model_from_config(config: Dict[str, Any]) -> EnumerableLatentModel:
    """Validate a config document and build the model it describes."""
    errors = validation_errors(config, MODEL_SCHEMA)
    if errors:
        for message in errors:
            logger.error(f"model config: {message}")
        raise ConfigError(f"model config failed validation with {len(errors)} error(s): {errors[0]}")
    qv = config["qV"]
    return EnumerableLatentModel(
        theta_labels=config["theta"],
        prior=config["prior"],
        q_u=config["qU"],
        eta=config["eta"],
        m=qv["m"],
        z_support=qv["z_support"],
        zeta_table=qv["zeta_table"],
        z_probs=qv["probs"],
        u_labels=config.get("u"),
        target=config.get("target"),
        proposal=config.get("proposal"),
        name=config.get("name", "model"),
    )


def two_coin() -> EnumerableLatentModel:
    return model_from_config(json.loads((CONFIG_DIR / "two_coin.json").read_text(encoding="utf-8")))


def two_coin_exact() -> EnumerableLatentModel:
    """Two-coin target with zeta(1) = eta(1) almost surely, so w is identically 1.

    One latent draw from the exact conditional of z given theta, weighted by
    the exact marginal likelihood.
    """
    base = two_coin()
    bias = np.asarray(COIN_BIAS)
    lik = np.asarray(OBSERVATION_LIKELIHOOD)
    joint = np.stack([(1 - bias) * lik[0], bias * lik[1]], axis=1)
    marginal = joint.sum(axis=1)
    conditional = joint / marginal[:, None]
    n_u = base.n_u
    return EnumerableLatentModel(
        theta_labels=base.theta_labels,
        prior=base.prior,
        q_u=base.q_u,
        eta=np.repeat(marginal[:, None], n_u, axis=1),
        m=1,
        z_support=base.z_support,
        zeta_table=np.repeat(np.repeat(marginal[:, None, None], n_u, axis=1), 2, axis=2),
        z_probs=np.repeat(conditional[:, None, :], n_u, axis=1),
        u_labels=base.u_labels,
        proposal=base.proposal,
        name="two-coin-exact",
    )


PRESETS: Dict[str, Callable[[], EnumerableLatentModel]] = {
    "two-coin": two_coin,
    "two-coin-exact": two_coin_exact,
}


def load_model(source: Union[str, Path]) -> EnumerableLatentModel:
    """Resolve a preset name or load a JSON config file."""
    if isinstance(source, str) and source in PRESETS:
        return PRESETS[source]()
    path = Path(source)
    if not path.exists():
        raise ConfigError(f"{source!r} is neither a preset ({sorted(PRESETS)}) nor an existing file")
    try:
        config = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"JSON parse error in {path}: {exc}") from exc
    return model_from_config(config)


def _rows(rng: np.random.Generator, shape: tuple, low: float = 0.1) -> np.ndarray:
    raw = rng.uniform(low, 1.0, size=shape)
    return raw / raw.sum(axis=-1, keepdims=True)


def random_latent_model(
    rng: np.random.Generator,
    n_theta: int = 3,
    n_u: int = 2,
    m: int = 2,
    n_z: int = 2,
    name: str = "random",
) -> EnumerableLatentModel:
    """Random enumerable model with positive eta, so the support condition holds."""
    return EnumerableLatentModel(
        theta_labels=list(range(n_theta)),
        prior=rng.uniform(0.5, 1.5, size=n_theta),
        q_u=_rows(rng, (n_theta, n_u)),
        eta=rng.uniform(0.3, 1.5, size=(n_theta, n_u)),
        m=m,
        z_support=list(range(n_z)),
        zeta_table=rng.uniform(0.05, 1.0, size=(n_theta, n_u, n_z)),
        z_probs=_rows(rng, (n_theta, n_u, n_z)),
        proposal=_rows(rng, (n_theta, n_theta)),
        name=name,
    )
