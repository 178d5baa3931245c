# %% [markdown]
# # From tick rows to price-change states
#
# Parse a day of synthetic feed rows, keep the in-session ADD orders of one
# stock, and turn each interval's consecutive prices into a nine-state
# sequence.

# %%
from collections import Counter

from lobmarkov.chainbuilder import STATE_LABELS, build_sequence
from lobmarkov.data import small_fixture_dir
from lobmarkov.tickstore import IngestReport, Side, UniverseConfig, iter_runs, parse_tick_stream

day_file = sorted(small_fixture_dir().glob("ticks_*.csv"))[0]
universe = UniverseConfig(tier_map={"AMZN": "HMC", "PEP": "MMC", "NKE": "LMC"})
report = IngestReport()
runs = dict(iter_runs(parse_tick_stream(day_file, report=report), universe, report))
print(report.to_dict()["rows_rejected"])

# %% [markdown]
# A run is keyed by (ticker, day, side, interval) and ordered by time then order id.

# %%
key = ("AMZN", day_file.stem.split("_")[1], Side.ASK, "T1")
prices = [e.price for e in runs[key]]
seq = build_sequence(prices, key)
print(prices[:6])
print(seq.letters()[:60])
for state, n in sorted(Counter(seq.states.tolist()).items()):
    print(f"{STATE_LABELS[state]:>22}  {n}")
