#include "iodinesim/timeseries.hpp"

#include <stdexcept>
#include <string>

namespace iodinesim {

void require_valid(const TimeSeries& ts, const char* what) {
    if (ts.values.empty())
        throw std::invalid_argument(std::string(what) + ": series must hold at least one sample");
    if (!(ts.dt > 0.0))
        throw std::invalid_argument(std::string(what) + ": sample spacing must be > 0");
}

}  // namespace iodinesim
