#pragma once

#include "qfall/errors.hpp"
#include "qfall/core.hpp"
#include "qfall/fft.hpp"
#include "qfall/states.hpp"
#include "qfall/prepare.hpp"
#include "qfall/evolve.hpp"
#include "qfall/tof.hpp"
#include "qfall/digest.hpp"
#include "qfall/experiments.hpp"
#include "qfall/config.hpp"
#include "qfall/report_io.hpp"
#include "qfall/validation.hpp"
