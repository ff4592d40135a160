#pragma once

#include "cimtpu/cim.hpp"
#include "cimtpu/collectives.hpp"
#include "cimtpu/config_json.hpp"
#include "cimtpu/dse.hpp"
#include "cimtpu/energy.hpp"
#include "cimtpu/hwconfig.hpp"
#include "cimtpu/mapper.hpp"
#include "cimtpu/memmodel.hpp"
#include "cimtpu/multidevice.hpp"
#include "cimtpu/report_io.hpp"
#include "cimtpu/systolic.hpp"
#include "cimtpu/units.hpp"
#include "cimtpu/vpu.hpp"
#include "cimtpu/workload.hpp"
