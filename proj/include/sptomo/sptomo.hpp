#pragma once

#include "sptomo/core.hpp"
#include "sptomo/geometry.hpp"
#include "sptomo/kernel.hpp"
#include "sptomo/deapodization.hpp"
#include "sptomo/fft.hpp"
#include "sptomo/sparse.hpp"
#include "sptomo/filters.hpp"
#include "sptomo/gridding.hpp"
#include "sptomo/density.hpp"
#include "sptomo/cache.hpp"
#include "sptomo/operators.hpp"
#include "sptomo/solvers.hpp"
#include "sptomo/pipeline.hpp"
#include "sptomo/io.hpp"
