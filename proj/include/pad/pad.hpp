#pragma once

#include "pad/codec.hpp"
#include "pad/config.hpp"
#include "pad/errors.hpp"
#include "pad/evaluation.hpp"
#include "pad/fixtures.hpp"
#include "pad/fusion.hpp"
#include "pad/image.hpp"
#include "pad/mask_refinement.hpp"
#include "pad/pipeline.hpp"
#include "pad/protocol.hpp"
#include "pad/region_provider.hpp"
#include "pad/semantic_independence.hpp"
#include "pad/spatial_heterogeneity.hpp"
