#pragma once

#include "att/arch.hpp"
#include "att/binio.hpp"
#include "att/buffer_io.hpp"
#include "att/config.hpp"
#include "att/dataset.hpp"
#include "att/diagnostics.hpp"
#include "att/distill.hpp"
#include "att/errors.hpp"
#include "att/eval.hpp"
#include "att/hash.hpp"
#include "att/idx.hpp"
#include "att/matrix.hpp"
#include "att/meta_grad.hpp"
#include "att/nn.hpp"
#include "att/parallel.hpp"
#include "att/report_io.hpp"
#include "att/rng.hpp"
#include "att/svg.hpp"
#include "att/synth.hpp"
#include "att/trajectory.hpp"
#include "att/unroll.hpp"
#include "att/zca.hpp"
