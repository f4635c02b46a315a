#pragma once

// Umbrella header for the whole library.

#include "itemval/accuracy.hpp"
#include "itemval/assigner.hpp"
#include "itemval/core.hpp"
#include "itemval/csv.hpp"
#include "itemval/cvr.hpp"
#include "itemval/embedding.hpp"
#include "itemval/errors.hpp"
#include "itemval/numfmt.hpp"
#include "itemval/pairs.hpp"
#include "itemval/remote.hpp"
#include "itemval/report.hpp"
#include "itemval/synth.hpp"
