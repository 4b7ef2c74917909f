"""Point cloud to similarity graph to reconstruction, written to ./pipeline_out."""

import warnings

from szegraph.pipeline import PipelineConfig, blob_dataset, pipeline_run

warnings.simplefilter("ignore", UserWarning)

data = blob_dataset(n=1000, clusters=10, seed=0)
res = pipeline_run(PipelineConfig(sigma=0.0248, densify=0.2), data=data, out_dir="pipeline_out")
for key, val in res.summary.items():
    print(f"{key}: {val}")
print("exit code:", res.exit_code)
