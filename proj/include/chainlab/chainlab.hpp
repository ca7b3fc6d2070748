// Copyright chainlab contributors
// SPDX-License-Identifier: Apache-2.0

#ifndef CHAINLAB_CHAINLAB_HPP
#define CHAINLAB_CHAINLAB_HPP

#include "chainlab/center_lift.hpp"
#include "chainlab/center_shadowing.hpp"
#include "chainlab/chain_graph.hpp"
#include "chainlab/closing.hpp"
#include "chainlab/io.hpp"
#include "chainlab/preset_io.hpp"
#include "chainlab/pseudo_orbit.hpp"
#include "chainlab/rng.hpp"
#include "chainlab/scenario.hpp"
#include "chainlab/skew_product.hpp"
#include "chainlab/splitting.hpp"
#include "chainlab/torus.hpp"

#endif  // CHAINLAB_CHAINLAB_HPP
