# %% [markdown]
# # Plant a U-shaped inertia profile and recover it end to end
#
# Write tick files whose neutral self-transition is high at the open and
# close, run the whole pipeline, and compare the estimated p55 curve with
# the planted one.  Set ``DAYS = 12`` and ``TICKERS = None`` for the full
# 15-stock, 12-day fixture.

# %%
import tempfile
from pathlib import Path

import numpy as np

from lobmarkov.config import RunConfig
from lobmarkov.pipeline import p55_profiles, run_pipeline
from lobmarkov.synth import u_shape_model, write_fixture
from lobmarkov.tickstore import DEFAULT_TIER_MAP, DEFAULT_TRADING_DAYS

DAYS = 2
TICKERS = {"AMZN": "HMC", "MSFT": "HMC", "PEP": "MMC", "ORCL": "MMC", "NKE": "LMC", "UNP": "LMC"}

tier_map = TICKERS or dict(DEFAULT_TIER_MAP)
days = list(DEFAULT_TRADING_DAYS[:DAYS])
work = Path(tempfile.mkdtemp(prefix="lobmarkov_"))
model = u_shape_model()
write_fixture(work / "ticks", model, tier_map, days, events_per_run=500, seed=0)

cfg = RunConfig(inputs=[str(work / "ticks")], output_dir=str(work / "out"), tier_map=tier_map, trading_days=days)
manifest = run_pipeline(cfg)
print(len(manifest.artifacts), "artifacts in", cfg.output_dir)

# %%
for (tier, side), est in p55_profiles(cfg.output_dir, cfg).items():
    planted = model.p55_profile(tier, side, cfg.interval_names)
    r = np.corrcoef(est, planted)[0, 1]
    print(f"{tier} {side}: estimated {np.round(est, 3)}  r={r:.4f}")

# %%
print((Path(cfg.output_dir) / "report.md").read_text()[:1200])
