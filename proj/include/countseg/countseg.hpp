#pragma once

#include "countseg/benchmark.hpp"
#include "countseg/constrained.hpp"
#include "countseg/dispersion.hpp"
#include "countseg/errors.hpp"
#include "countseg/interval_union.hpp"
#include "countseg/loss.hpp"
#include "countseg/model_selection.hpp"
#include "countseg/naive_dp.hpp"
#include "countseg/pdp.hpp"
#include "countseg/result_io.hpp"
#include "countseg/segmentation.hpp"
#include "countseg/series.hpp"
#include "countseg/simulation.hpp"
