#pragma once

// Proximal nested sampling for imaging inverse problems with log-convex
// likelihoods: prox calculus, measurement operators, constrained Langevin
// kernels, the nested-sampling evidence driver, and data-driven priors
// bridged through denoisers.

#include "proxns/core.hpp"
#include "proxns/denoiser.hpp"
#include "proxns/denoiser_bridge.hpp"
#include "proxns/experiment.hpp"
#include "proxns/fft.hpp"
#include "proxns/io.hpp"
#include "proxns/kernels.hpp"
#include "proxns/likelihood.hpp"
#include "proxns/nested.hpp"
#include "proxns/operators.hpp"
#include "proxns/potentials.hpp"
#include "proxns/prox.hpp"
#include "proxns/rng.hpp"
#include "proxns/wavelets.hpp"
