#pragma once

#include "torus.hpp"
#include "algebra.hpp"
#include "calculus.hpp"
#include "energy.hpp"
#include "gauge.hpp"
#include "flow.hpp"
#include "identities.hpp"
#include "io.hpp"
