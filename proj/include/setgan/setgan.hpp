#pragma once

#include "setgan/config.hpp"
#include "setgan/core/errors.hpp"
#include "setgan/core/image.hpp"
#include "setgan/core/rng.hpp"
#include "setgan/core/tensor.hpp"
#include "setgan/data.hpp"
#include "setgan/dataprep.hpp"
#include "setgan/embedding.hpp"
#include "setgan/eval.hpp"
#include "setgan/latent.hpp"
#include "setgan/nets.hpp"
#include "setgan/spline.hpp"
#include "setgan/synth.hpp"
#include "setgan/train.hpp"
