#include "relfuzz/minimize.hpp"

#include "relfuzz/sandbox.hpp"

namespace relfuzz::minimize {

using namespace isa;

Program remove_instruction(const Program &program, std::size_t index)
{
    std::size_t first = index;
    while (first > 0 && program.instructions[first - 1].is_instrumentation)
        --first;
    const std::size_t removed = index + 1 - first;

    Program out;
    out.instructions.reserve(program.size() - removed);
    for (std::size_t i = 0; i < program.size(); ++i)
        if (i < first || i > index)
            out.instructions.push_back(program.instructions[i]);
    for (const auto &[name, target] : program.labels) {
        if (target <= first)
            out.labels[name] = target;
        else if (target > index)
            out.labels[name] = target - removed;
        else
            out.labels[name] = first;  // label inside the removed range
    }
    out.relink();
    return out;
}

std::vector<std::size_t> candidates(const Program &program)
{
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < program.size(); ++i)
        if (!program.instructions[i].is_instrumentation)
            out.push_back(i);
    return out;
}

Program minimize(const Program &program, const std::vector<InputData> &inputs,
                 const Predicate &predicate)
{
    if (!predicate(program, inputs))
        throw PredicateUnstable("the predicate does not hold for the original test case");
    Program current = program;
    bool progress = true;
    while (progress) {
        progress = false;
        for (auto index : candidates(current)) {
            auto smaller = remove_instruction(current, index);
            if (!validate_sandbox(smaller).empty() || !predicate(smaller, inputs))
                continue;
            current = std::move(smaller);
            progress = true;
            break;
        }
    }
    return current;
}

}  // namespace relfuzz::minimize
