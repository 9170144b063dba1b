#ifndef LATBIN_LATBIN_HPP
#define LATBIN_LATBIN_HPP

#include "latbin/numeric.hpp"
#include "latbin/model.hpp"
#include "latbin/information.hpp"
#include "latbin/optimize.hpp"
#include "latbin/estimation.hpp"
#include "latbin/efficiency.hpp"
#include "latbin/simulation.hpp"
#include "latbin/data_io.hpp"

#endif  // LATBIN_LATBIN_HPP
