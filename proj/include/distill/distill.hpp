#pragma once

/// Umbrella header for the distill library: analytically tractable
/// Gaussian-mixture diffusion oracles, guidance decomposition, min-norm
/// multi-gradient blending, toy differentiable generators, and the experiment
/// harness that ties them together.

#include "distill/config.hpp"
#include "distill/generator.hpp"
#include "distill/guidance.hpp"
#include "distill/harness.hpp"
#include "distill/io.hpp"
#include "distill/mgda.hpp"
#include "distill/oracle.hpp"
#include "distill/presets.hpp"
#include "distill/rng.hpp"
#include "distill/schedule.hpp"
#include "distill/toml.hpp"
#include "distill/vec.hpp"
