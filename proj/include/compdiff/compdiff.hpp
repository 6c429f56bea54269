#pragma once

#include "compdiff/seeding.hpp"
#include "compdiff/network.hpp"
#include "compdiff/projection.hpp"
#include "compdiff/reconstruction.hpp"
#include "compdiff/diffusion.hpp"
#include "compdiff/stability.hpp"
#include "compdiff/config.hpp"
#include "compdiff/experiment.hpp"
#include "compdiff/output.hpp"
#include "compdiff/stability_report.hpp"
