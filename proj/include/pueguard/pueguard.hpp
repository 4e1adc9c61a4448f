#pragma once

#include "pueguard/config.hpp"
#include "pueguard/detector.hpp"
#include "pueguard/error.hpp"
#include "pueguard/experiment.hpp"
#include "pueguard/fusion.hpp"
#include "pueguard/markov.hpp"
#include "pueguard/netsim.hpp"
#include "pueguard/numeric.hpp"
#include "pueguard/persistence.hpp"
#include "pueguard/radio.hpp"
#include "pueguard/scenario_io.hpp"
#include "pueguard/verifier.hpp"
