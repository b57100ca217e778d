# %% [markdown]
# # Collision of three clouds in 2D
#
# Clouds at p0 and p2 collide head-on along x while a third cloud at p1
# crosses along y.  The channel p0 + p2 -> p1 + p3 is closed by its energy
# mismatch, so without loss the clouds pass each other.  A loss stripe at the
# empty mode p3 = -p1 opens it and feeds the p1 cloud.  This runs on a
# 512 x 512 grid and takes several minutes.

# %%
from nhwm.config import RunConfig
from nhwm.runs import run_scenario
from nhwm.scenarios import ScenarioConfig, collision_mismatch, collision_momenta

cfg = ScenarioConfig.collision_default()
print(collision_momenta(cfg))
print(f"mismatch {collision_mismatch(cfg):.3f} /ms")

# %%
ctrl = run_scenario(RunConfig(scenario=cfg), no_loss=True).series
lossy = run_scenario(RunConfig(scenario=cfg)).series

# %%
print(f"control: p3/p1 = {100 * ctrl['p_3'][-1] / ctrl['p_s'][-1]:.2f}%")
print(f"with loss: p1 signal {100 * (lossy['p_s'][-1] / ctrl['p_s'][-1] - 1):+.1f}% over the control")
