#ifndef RINC_RINC_HPP
#define RINC_RINC_HPP

#include "rinc/codec.hpp"
#include "rinc/error.hpp"
#include "rinc/inr.hpp"
#include "rinc/metrics.hpp"
#include "rinc/model_compress.hpp"
#include "rinc/pointcloud.hpp"
#include "rinc/pointcloud_io.hpp"
#include "rinc/projection.hpp"

#endif  // RINC_RINC_HPP
