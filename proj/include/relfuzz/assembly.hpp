/// Line-oriented text form of programs: one instruction or label per line, `#` comments.
/// An instruction whose trailing comment is exactly `instrumentation` is flagged as such.
#pragma once

#include <string>
#include <string_view>

#include "relfuzz/isa.hpp"

namespace relfuzz::isa {

/// Throws ParseError naming the offending line.
Program parse_program(std::string_view text);

std::string render_instruction(const Instruction &instr);
std::string render_program(const Program &program);

}  // namespace relfuzz::isa
