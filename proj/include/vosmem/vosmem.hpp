#pragma once

#include "vosmem/commands.hpp"
#include "vosmem/core.hpp"
#include "vosmem/dataset.hpp"
#include "vosmem/decoder.hpp"
#include "vosmem/encoders.hpp"
#include "vosmem/metrics.hpp"
#include "vosmem/numerics.hpp"
#include "vosmem/object_memory.hpp"
#include "vosmem/object_transformer.hpp"
#include "vosmem/pipeline.hpp"
#include "vosmem/pixel_memory.hpp"
#include "vosmem/png_io.hpp"
#include "vosmem/tta.hpp"
