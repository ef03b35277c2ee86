"""
Survey ingestion, filtering, trimming, and weighted tabulation
==============================================================

Walks the data layer end to end: write a small survey extract to CSV, load
it through the schema mapping, restrict to the working-age wage/salary
sample, trim the wage tails, and tabulate weighted shares and means.
"""

import os
import tempfile

from eomwage import (
    filter_analysis_sample,
    load_csv,
    synth_fixture,
    trim_wage_tails,
    weighted_tabulate,
)

# Generate a synthetic survey-schema dataset and round-trip it through CSV,
# exactly the way a real extract would be ingested.
fixture = synth_fixture(n=3000, seed=7)
tmp = tempfile.mkdtemp()
csv_path = os.path.join(tmp, "survey.csv")
fixture.frame.to_csv(csv_path, index=False)

schema = {col: col for col in fixture.frame.columns}
ds = load_csv(csv_path, schema)
print(f"loaded {ds.n} rows, {len(ds.columns)} columns")
print("provenance:", ds.provenance.source)

# Default analysis filter: ages 15-59 inclusive, wage/salary earners only.
sample = filter_analysis_sample(ds)
print(f"\nworking-age wage/salary sample: {sample.n} rows")

# Drop 0.5 percent of rows at each end of the wage distribution.
trimmed = trim_wage_tails(sample, 0.005)
print(f"after trimming: {trimmed.n} rows")
for entry in trimmed.provenance.filters:
    print("  ", entry)

# Weighted tabulations: shares sum to 100 within the partition.
print()
print(weighted_tabulate(trimmed, ["sector"], "share").to_markdown())
print(weighted_tabulate(trimmed, ["gender"], ("mean", "daily_wage")).to_markdown())
