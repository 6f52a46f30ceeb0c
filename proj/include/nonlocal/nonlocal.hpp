#pragma once

#include "nonlocal/attractor.hpp"
#include "nonlocal/comparison.hpp"
#include "nonlocal/config.hpp"
#include "nonlocal/ensemble.hpp"
#include "nonlocal/errors.hpp"
#include "nonlocal/evolution.hpp"
#include "nonlocal/grid.hpp"
#include "nonlocal/io.hpp"
#include "nonlocal/kernel.hpp"
#include "nonlocal/lyapunov.hpp"
#include "nonlocal/nonlinearity.hpp"
#include "nonlocal/parallel.hpp"
#include "nonlocal/runner.hpp"
