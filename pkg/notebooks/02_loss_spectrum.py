# %% [markdown]
# # Velocity-selective loss from a Lambda system
#
# The probe and coupling beams see Doppler-shifted detunings.  Atoms at rest
# sit in the dark state and are not excited; a moving class is brought to
# the single-photon resonance and pumped out.  Here the default beams are
# counter-propagating, which puts the loss resonance on the idler at -k_s.

# %%
import numpy as np

from nhwm.eit import light_shift_report, loss_spectrum, timescale_check
from nhwm.scenarios import ScenarioConfig, default_eit_params
from nhwm.units import hz_to_rad_per_ms

cfg = ScenarioConfig.box_default()
mass = cfg.physical().mass
lam = default_eit_params()
print(lam)

# %%
k = np.linspace(-2 * cfg.k_s_per_um, 2 * cfg.k_s_per_um, 401)
tab = loss_spectrum(lam, k, mass)
ipk = int(np.argmax(tab.gamma))
print(f"{tab.k.size} points after refinement")
print(f"peak gamma {tab.gamma[ipk]:.3f} /ms at k = {tab.k[ipk]:.3f} /um")
g0 = loss_spectrum(lam, [0.0], mass, refine=False).gamma[0]
print(f"gamma at rest: {g0:.2e} /ms")
gs = loss_spectrum(lam, [cfg.k_s_per_um], mass, refine=False).gamma[0]
print(f"gamma on the signal: {gs:.2e} /ms, mismatch dE = {cfg.mismatch():.3f} /ms")

# %% [markdown]
# The light shift has a part linear in k (a small uniform drift); the rest is
# compared with the kinetic energy away from the resonance.

# %%
rep = light_shift_report(lam, mass, cfg.k_s_per_um + 3 * cfg.band_half_width_per_um)
print(rep)

# %% [markdown]
# Excited-state lifetime against the recoil escape time and a 50 ms run.

# %%
print(timescale_check(lam, hz_to_rad_per_ms(cfg.omega_perp_hz), mass, T_BEC=50.0))
