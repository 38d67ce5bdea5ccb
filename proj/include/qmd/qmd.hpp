#pragma once

#include "qmd/copulas.hpp"
#include "qmd/core.hpp"
#include "qmd/empirical.hpp"
#include "qmd/linkage.hpp"
#include "qmd/measure.hpp"
#include "qmd/parallel.hpp"
#include "qmd/random.hpp"
