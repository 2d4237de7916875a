#ifndef NESTOPT_NESTOPT_HPP
#define NESTOPT_NESTOPT_HPP

#include "nestopt/asa.hpp"
#include "nestopt/diagnostics.hpp"
#include "nestopt/errors.hpp"
#include "nestopt/geometry.hpp"
#include "nestopt/nasa.hpp"
#include "nestopt/oracle.hpp"
#include "nestopt/problems.hpp"

#endif  // NESTOPT_NESTOPT_HPP
