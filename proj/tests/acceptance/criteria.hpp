#pragma once

#include <functional>
#include <string>
#include <vector>

namespace inval::acceptance {

struct Outcome {
    bool passed = false;
    std::string detail;
};

struct Criterion {
    std::string name;
    double time_limit_s;  // 0 when the criterion states no runtime bound
    std::function<Outcome()> run;
};

std::vector<Criterion> primary_criteria();

}  // namespace inval::acceptance
