# %% [markdown]
# # Amplifying a matter-wave packet in a box trap
#
# A weak packet at k_s is imprinted on a box-trapped condensate.  Without
# loss it travels through the condensate unchanged.  With a Gaussian loss on
# the idler momentum it grows, and the signal gained tracks the atoms lost.
# Each run takes about 15 s.

# %%
from nhwm.config import RunConfig
from nhwm.runs import run_scenario
from nhwm.scenarios import ScenarioConfig

runs = {}
for loss in ("none", "gaussian", "eit"):
    cfg = ScenarioConfig.box_default(loss=loss)
    runs[loss] = run_scenario(RunConfig(scenario=cfg, stride_ms=0.5)).series

# %%
N0 = runs["gaussian"]["N"][0]
for loss, s in runs.items():
    ps = s["p_s"]
    print(f"{loss:9s} p_s(t_end)/p_s(0) = {ps[-1] / ps[0]:.3f}   lost {100 * s['N_lost'][-1] / N0:.2f}%")

# %% [markdown]
# Signal gained against atoms lost for the Gaussian loss.

# %%
s = runs["gaussian"]
for i in range(0, s["t"].size, 20):
    print(f"t = {s['t'][i]:5.1f} ms   dp_s = {s['p_s'][i] - s['p_s'][0]:8.2f}   N_lost = {s['N_lost'][i]:8.2f}")
