#pragma once

#include "actinf/control.hpp"
#include "actinf/estimation.hpp"
#include "actinf/ffg.hpp"
#include "actinf/freenergy.hpp"
#include "actinf/gaussian.hpp"
#include "actinf/linalg.hpp"
#include "actinf/model.hpp"
#include "actinf/random.hpp"
#include "actinf/simulation.hpp"
