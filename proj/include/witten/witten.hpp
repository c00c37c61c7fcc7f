#pragma once

#include "witten/combinatorics.hpp"
#include "witten/config.hpp"
#include "witten/eigensolver.hpp"
#include "witten/errors.hpp"
#include "witten/exterior_algebra.hpp"
#include "witten/matrix_market.hpp"
#include "witten/morse_function.hpp"
#include "witten/multiprecision.hpp"
#include "witten/oscillator.hpp"
#include "witten/parallel.hpp"
#include "witten/precision_oracle.hpp"
#include "witten/rank.hpp"
#include "witten/report.hpp"
#include "witten/torus_grid.hpp"
#include "witten/tunneling.hpp"
#include "witten/verifier.hpp"
#include "witten/witten_complex.hpp"
#include "witten/cli.hpp"
