#include "relfuzz/assembly.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>
#include <unordered_map>

namespace relfuzz::isa {

namespace {

struct MnemonicInfo {
    Opcode opcode;
    Cond cond = Cond::O;
    Width string_width = Width::Byte;
};

const std::unordered_map<std::string, MnemonicInfo> &mnemonic_table()
{
    static const auto table = [] {
        std::unordered_map<std::string, MnemonicInfo> t;
        const std::pair<const char *, Opcode> plain[] = {
            {"ADD", Opcode::Add},     {"ADC", Opcode::Adc},     {"SUB", Opcode::Sub},
            {"SBB", Opcode::Sbb},     {"CMP", Opcode::Cmp},     {"INC", Opcode::Inc},
            {"DEC", Opcode::Dec},     {"NEG", Opcode::Neg},     {"JMP", Opcode::Jmp},
            {"DIV", Opcode::Div},     {"MUL", Opcode::Mul},     {"IMUL", Opcode::Imul},
            {"CLC", Opcode::Clc},     {"STC", Opcode::Stc},     {"CMC", Opcode::Cmc},
            {"AND", Opcode::And},     {"OR", Opcode::Or},       {"XOR", Opcode::Xor},
            {"NOT", Opcode::Not},     {"TEST", Opcode::Test},   {"XADD", Opcode::Xadd},
            {"CMPXCHG", Opcode::Cmpxchg}, {"MOV", Opcode::Mov}, {"MOVZX", Opcode::Movzx},
            {"MOVSX", Opcode::Movsx}, {"MOVSXD", Opcode::Movsx}, {"XCHG", Opcode::Xchg},
            {"BSWAP", Opcode::Bswap}, {"NOP", Opcode::Nop},     {"CBW", Opcode::Cbw},
            {"CWDE", Opcode::Cwde},   {"CDQE", Opcode::Cdqe},   {"CWD", Opcode::Cwd},
            {"CDQ", Opcode::Cdq},     {"CQO", Opcode::Cqo},     {"BT", Opcode::Bt},
            {"BTS", Opcode::Bts},     {"BTR", Opcode::Btr},     {"BTC", Opcode::Btc},
            {"BSF", Opcode::Bsf},     {"BSR", Opcode::Bsr},     {"FENCE", Opcode::Fence},
            {"LFENCE", Opcode::Fence},
        };
        for (const auto &[name, op] : plain)
            t.emplace(name, MnemonicInfo{op});
        for (std::size_t c = 0; c < kNumConds; ++c) {
            const auto cond = static_cast<Cond>(c);
            const auto suffix = cond_name(cond);
            t.emplace("J" + suffix, MnemonicInfo{Opcode::Jcc, cond});
            t.emplace("SET" + suffix, MnemonicInfo{Opcode::Setcc, cond});
            t.emplace("CMOV" + suffix, MnemonicInfo{Opcode::Cmovcc, cond});
        }
        const std::pair<const char *, Cond> aliases[] = {
            {"Z", Cond::E}, {"NZ", Cond::NE}, {"C", Cond::B}, {"NC", Cond::AE}};
        for (const auto &[suffix, cond] : aliases) {
            t.emplace(std::string("J") + suffix, MnemonicInfo{Opcode::Jcc, cond});
            t.emplace(std::string("SET") + suffix, MnemonicInfo{Opcode::Setcc, cond});
            t.emplace(std::string("CMOV") + suffix, MnemonicInfo{Opcode::Cmovcc, cond});
        }
        const std::pair<const char *, Width> widths[] = {
            {"B", Width::Byte}, {"W", Width::Word}, {"D", Width::Dword}, {"Q", Width::Qword}};
        for (const auto &[suffix, w] : widths) {
            t.emplace(std::string("CMPS") + suffix, MnemonicInfo{Opcode::Cmps, Cond::O, w});
            t.emplace(std::string("SCAS") + suffix, MnemonicInfo{Opcode::Scas, Cond::O, w});
        }
        return t;
    }();
    return table;
}

const std::unordered_map<std::string, RegOperand> &register_table()
{
    static const auto table = [] {
        std::unordered_map<std::string, RegOperand> t;
        for (auto r : kAllRegs)
            for (auto w : {Width::Byte, Width::Word, Width::Dword, Width::Qword})
                t.emplace(reg_name(r, w), RegOperand{r, w});
        return t;
    }();
    return table;
}

std::string trim(std::string_view s)
{
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b])))
        ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1])))
        --e;
    return std::string(s.substr(b, e - b));
}

std::string upper(std::string s)
{
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    return s;
}

std::optional<std::int64_t> parse_int(const std::string &tok)
{
    if (tok.empty())
        return std::nullopt;
    std::size_t pos = 0;
    bool neg = false;
    if (tok[0] == '-' || tok[0] == '+') {
        neg = tok[0] == '-';
        pos = 1;
    }
    int base = 10;
    if (tok.size() > pos + 2 && tok[pos] == '0' && (tok[pos + 1] == 'x' || tok[pos + 1] == 'X')) {
        base = 16;
        pos += 2;
    } else if (tok.size() > pos + 2 && tok[pos] == '0' &&
               (tok[pos + 1] == 'b' || tok[pos + 1] == 'B')) {
        base = 2;
        pos += 2;
    }
    if (pos >= tok.size())
        return std::nullopt;
    std::uint64_t value = 0;
    for (; pos < tok.size(); ++pos) {
        const char c = static_cast<char>(std::tolower(static_cast<unsigned char>(tok[pos])));
        int digit;
        if (c >= '0' && c <= '9')
            digit = c - '0';
        else if (c >= 'a' && c <= 'f')
            digit = c - 'a' + 10;
        else if (c == '_')
            continue;
        else
            return std::nullopt;
        if (digit >= base)
            return std::nullopt;
        value = value * static_cast<std::uint64_t>(base) + static_cast<std::uint64_t>(digit);
    }
    const auto signed_value = static_cast<std::int64_t>(value);
    return neg ? -signed_value : signed_value;
}

std::optional<Width> ptr_width(const std::string &word)
{
    if (word == "BYTE")
        return Width::Byte;
    if (word == "WORD")
        return Width::Word;
    if (word == "DWORD")
        return Width::Dword;
    if (word == "QWORD")
        return Width::Qword;
    return std::nullopt;
}

struct ParsedOperand {
    Operand operand;
    bool explicit_width = false;
};

ParsedOperand parse_operand(const std::string &raw, std::size_t line)
{
    std::string text = trim(raw);
    if (text.empty())
        throw ParseError(ParseErrorKind::BadOperand, line, "empty operand");
    if (text[0] == '.')
        return {LabelRef{text, 0}};

    const auto bracket = text.find('[');
    if (bracket != std::string::npos) {
        MemOperand mem;
        bool explicit_width = false;
        const std::string head = upper(trim(text.substr(0, bracket)));
        if (!head.empty()) {
            std::istringstream words(head);
            std::string size_word, ptr_word, extra;
            words >> size_word >> ptr_word >> extra;
            const auto w = ptr_width(size_word);
            if (!w || ptr_word != "PTR" || !extra.empty())
                throw ParseError(ParseErrorKind::BadOperand, line,
                                 "bad memory size prefix '" + head + "'");
            mem.width = *w;
            explicit_width = true;
        }
        const auto close = text.find(']', bracket);
        if (close == std::string::npos || !trim(text.substr(close + 1)).empty())
            throw ParseError(ParseErrorKind::BadOperand, line, "malformed memory operand");
        const std::string inner = upper(text.substr(bracket + 1, close - bracket - 1));

        // split into signed terms
        std::vector<std::pair<bool, std::string>> terms;
        bool negative = false;
        std::string current;
        for (char c : inner) {
            if (c == '+' || c == '-') {
                if (!trim(current).empty())
                    terms.emplace_back(negative, trim(current));
                current.clear();
                negative = c == '-';
            } else {
                current += c;
            }
        }
        if (!trim(current).empty())
            terms.emplace_back(negative, trim(current));
        if (terms.empty())
            throw ParseError(ParseErrorKind::BadOperand, line, "empty memory operand");

        for (const auto &[neg, term] : terms) {
            const auto &regs = register_table();
            if (auto it = regs.find(term); it != regs.end()) {
                if (neg || it->second.width != Width::Qword)
                    throw ParseError(ParseErrorKind::BadOperand, line,
                                     "address register must be a positive 64-bit register");
                if (!mem.base)
                    mem.base = it->second.reg;
                else if (!mem.index)
                    mem.index = it->second.reg;
                else
                    throw ParseError(ParseErrorKind::BadOperand, line,
                                     "too many address registers");
            } else if (auto v = parse_int(term)) {
                mem.disp += neg ? -*v : *v;
            } else {
                throw ParseError(ParseErrorKind::BadOperand, line,
                                 "bad address term '" + term + "'");
            }
        }
        if (!mem.base)
            throw ParseError(ParseErrorKind::BadOperand, line,
                             "memory operand needs a base register");
        return {mem, explicit_width};
    }

    const auto &regs = register_table();
    if (auto it = regs.find(upper(text)); it != regs.end())
        return {it->second};
    if (auto v = parse_int(text))
        return {Immediate{*v}};
    throw ParseError(ParseErrorKind::BadOperand, line, "bad operand '" + text + "'");
}

enum class Kind { R, M, I, L };

Kind kind_of(const Operand &op)
{
    if (std::holds_alternative<RegOperand>(op))
        return Kind::R;
    if (std::holds_alternative<MemOperand>(op))
        return Kind::M;
    if (std::holds_alternative<Immediate>(op))
        return Kind::I;
    return Kind::L;
}

Width width_of(const Operand &op)
{
    if (const auto *r = std::get_if<RegOperand>(&op))
        return r->width;
    if (const auto *m = std::get_if<MemOperand>(&op))
        return m->width;
    return Width::Qword;
}

bool in(Width w, std::initializer_list<Width> ws)
{
    return std::find(ws.begin(), ws.end(), w) != ws.end();
}

std::size_t expected_arity(Opcode op)
{
    switch (op) {
    case Opcode::Nop:
    case Opcode::Fence:
    case Opcode::Clc:
    case Opcode::Stc:
    case Opcode::Cmc:
    case Opcode::Cbw:
    case Opcode::Cwde:
    case Opcode::Cdqe:
    case Opcode::Cwd:
    case Opcode::Cdq:
    case Opcode::Cqo:
    case Opcode::Cmps:
    case Opcode::Scas: return 0;
    case Opcode::Inc:
    case Opcode::Dec:
    case Opcode::Neg:
    case Opcode::Not:
    case Opcode::Bswap:
    case Opcode::Setcc:
    case Opcode::Jcc:
    case Opcode::Jmp:
    case Opcode::Mul:
    case Opcode::Div: return 1;
    default: return 2;
    }
}

/// Width a memory operand gets when the text carries no size prefix.
std::optional<Width> implied_memory_width(const Instruction &instr)
{
    switch (instr.opcode) {
    case Opcode::Movzx:
    case Opcode::Movsx:
    case Opcode::Inc:
    case Opcode::Dec:
    case Opcode::Neg:
    case Opcode::Not:
    case Opcode::Mul:
    case Opcode::Div: return std::nullopt;
    case Opcode::Setcc: return Width::Byte;
    default: break;
    }
    for (const auto &op : instr.operands)
        if (const auto *r = std::get_if<RegOperand>(&op))
            return r->width;
    return std::nullopt;
}

/// Returns an error message when the operand shapes are not a legal form.
std::optional<std::string> check_form(const Instruction &instr)
{
    const auto &ops = instr.operands;
    std::vector<Kind> k;
    for (const auto &op : ops)
        k.push_back(kind_of(op));
    auto form = [&](std::initializer_list<Kind> f) {
        return std::equal(k.begin(), k.end(), f.begin(), f.end());
    };
    const auto w0 = ops.empty() ? Width::Qword : width_of(ops[0]);
    const auto w1 = ops.size() < 2 ? Width::Qword : width_of(ops[1]);
    const bool same_width = ops.size() < 2 || k[1] == Kind::I || w0 == w1;

    if (instr.prefix == Prefix::Lock) {
        switch (instr.opcode) {
        case Opcode::Add:
        case Opcode::Adc:
        case Opcode::Sub:
        case Opcode::Sbb:
        case Opcode::And:
        case Opcode::Or:
        case Opcode::Xor:
        case Opcode::Inc:
        case Opcode::Dec:
        case Opcode::Neg:
        case Opcode::Not:
        case Opcode::Xadd:
        case Opcode::Cmpxchg: break;
        default: return "LOCK is not allowed on " + instr.mnemonic();
        }
        if (k.empty() || k[0] != Kind::M)
            return "LOCK requires a memory destination";
    }
    if ((instr.prefix == Prefix::Repe || instr.prefix == Prefix::Repne) != instr.is_string_op())
        return "REPE/REPNE go together with CMPS/SCAS only";

    switch (instr.opcode) {
    case Opcode::Add:
    case Opcode::Adc:
    case Opcode::Sub:
    case Opcode::Sbb:
    case Opcode::Cmp:
    case Opcode::And:
    case Opcode::Or:
    case Opcode::Xor:
    case Opcode::Test:
    case Opcode::Mov:
        if (!(form({Kind::R, Kind::R}) || form({Kind::R, Kind::M}) || form({Kind::M, Kind::R}) ||
              form({Kind::R, Kind::I}) || form({Kind::M, Kind::I})))
            return "expected reg/mem, reg/mem/imm";
        if (!same_width)
            return "operand widths differ";
        return std::nullopt;
    case Opcode::Inc:
    case Opcode::Dec:
    case Opcode::Neg:
    case Opcode::Not:
        if (!(form({Kind::R}) || form({Kind::M})))
            return "expected reg/mem";
        return std::nullopt;
    case Opcode::Movzx:
    case Opcode::Movsx:
        if (!(form({Kind::R, Kind::R}) || form({Kind::R, Kind::M})))
            return "expected reg, reg/mem";
        if (bytes(w1) >= bytes(w0) || w0 == Width::Byte)
            return "source must be narrower than destination";
        if (instr.opcode == Opcode::Movzx && w1 == Width::Dword)
            return "MOVZX has no 32-bit source form";
        return std::nullopt;
    case Opcode::Xchg:
        if (!(form({Kind::R, Kind::R}) || form({Kind::R, Kind::M}) || form({Kind::M, Kind::R})))
            return "expected reg/mem, reg/mem";
        if (!same_width)
            return "operand widths differ";
        return std::nullopt;
    case Opcode::Bswap:
        if (!form({Kind::R}) || !in(w0, {Width::Dword, Width::Qword}))
            return "expected 32- or 64-bit register";
        return std::nullopt;
    case Opcode::Cmovcc:
    case Opcode::Imul:
    case Opcode::Bsf:
    case Opcode::Bsr:
        if (!(form({Kind::R, Kind::R}) || form({Kind::R, Kind::M})))
            return "expected reg, reg/mem";
        if (!same_width || w0 == Width::Byte)
            return "expected matching 16/32/64-bit operands";
        return std::nullopt;
    case Opcode::Setcc:
        if (!(form({Kind::R}) || form({Kind::M})) || w0 != Width::Byte)
            return "expected 8-bit reg/mem";
        return std::nullopt;
    case Opcode::Jcc:
    case Opcode::Jmp:
        if (!form({Kind::L}))
            return "expected a label";
        return std::nullopt;
    case Opcode::Mul:
    case Opcode::Div:
        if (!(form({Kind::R}) || form({Kind::M})) || w0 != Width::Qword)
            return "expected 64-bit reg/mem";
        return std::nullopt;
    case Opcode::Bt:
    case Opcode::Bts:
    case Opcode::Btr:
    case Opcode::Btc:
        if (!(form({Kind::R, Kind::R}) || form({Kind::M, Kind::R}) || form({Kind::R, Kind::I}) ||
              form({Kind::M, Kind::I})))
            return "expected reg/mem, reg/imm";
        if (!same_width || w0 == Width::Byte)
            return "expected matching 16/32/64-bit operands";
        return std::nullopt;
    case Opcode::Xadd:
    case Opcode::Cmpxchg:
        if (!(form({Kind::R, Kind::R}) || form({Kind::M, Kind::R})))
            return "expected reg/mem, reg";
        if (!same_width)
            return "operand widths differ";
        return std::nullopt;
    default: return std::nullopt;  // nullary, arity already checked
    }
}

std::string render_imm(std::int64_t v)
{
    if (v < 0 || v <= 255)
        return std::to_string(v);
    std::ostringstream os;
    os << "0x" << std::hex << v;
    return os.str();
}

std::string render_operand(const Operand &op, bool show_width)
{
    if (const auto *r = std::get_if<RegOperand>(&op))
        return reg_name(r->reg, r->width);
    if (const auto *i = std::get_if<Immediate>(&op))
        return render_imm(i->value);
    if (const auto *l = std::get_if<LabelRef>(&op))
        return l->name;
    const auto &m = std::get<MemOperand>(op);
    std::string out;
    if (show_width) {
        switch (m.width) {
        case Width::Byte: out = "byte ptr "; break;
        case Width::Word: out = "word ptr "; break;
        case Width::Dword: out = "dword ptr "; break;
        case Width::Qword: out = "qword ptr "; break;
        }
    }
    out += "[" + reg_name(*m.base);
    if (m.index)
        out += " + " + reg_name(*m.index);
    if (m.disp > 0)
        out += " + " + render_imm(m.disp);
    else if (m.disp < 0)
        out += " - " + render_imm(-m.disp);
    return out + "]";
}

}  // namespace

Program parse_program(std::string_view text)
{
    Program program;
    struct PendingRef {
        std::size_t instr;
        std::size_t operand;
        std::size_t line;
    };
    std::vector<PendingRef> refs;

    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos)
            end = text.size();
        std::string_view raw = text.substr(start, end - start);
        start = end + 1;
        ++line_no;

        std::string comment;
        if (const auto hash = raw.find('#'); hash != std::string_view::npos) {
            comment = trim(raw.substr(hash + 1));
            raw = raw.substr(0, hash);
        }
        std::string body = trim(raw);
        if (body.empty()) {
            if (end == text.size())
                break;
            continue;
        }

        if (body[0] == '.') {
            const auto colon = body.find(':');
            if (colon == std::string::npos)
                throw ParseError(ParseErrorKind::BadOperand, line_no,
                                 "label definition needs a ':'");
            const std::string label = trim(body.substr(0, colon));
            if (!program.labels.emplace(label, program.instructions.size()).second)
                throw ParseError(ParseErrorKind::DuplicateLabel, line_no,
                                 "duplicate label " + label);
            body = trim(body.substr(colon + 1));
            if (body.empty())
                continue;
        }

        Instruction instr;
        instr.is_instrumentation = comment == "instrumentation";

        std::istringstream words(body);
        std::string first;
        words >> first;
        std::string mnemonic = upper(first);
        if (mnemonic == "LOCK" || mnemonic == "REPE" || mnemonic == "REPZ" || mnemonic == "REPNE" ||
            mnemonic == "REPNZ") {
            instr.prefix = mnemonic == "LOCK"                          ? Prefix::Lock
                           : (mnemonic == "REPE" || mnemonic == "REPZ") ? Prefix::Repe
                                                                        : Prefix::Repne;
            std::string next;
            words >> next;
            if (next.empty())
                throw ParseError(ParseErrorKind::UnknownMnemonic, line_no,
                                 "prefix without instruction");
            mnemonic = upper(next);
        }
        const auto &table = mnemonic_table();
        const auto it = table.find(mnemonic);
        if (it == table.end())
            throw ParseError(ParseErrorKind::UnknownMnemonic, line_no,
                             "unknown mnemonic " + mnemonic);
        instr.opcode = it->second.opcode;
        instr.cond = it->second.cond;
        instr.string_width = it->second.string_width;

        std::string rest;
        std::getline(words, rest);
        rest = trim(rest);
        std::vector<ParsedOperand> parsed;
        if (!rest.empty()) {
            std::size_t s = 0;
            while (true) {
                const auto comma = rest.find(',', s);
                parsed.push_back(parse_operand(rest.substr(s, comma - s), line_no));
                if (comma == std::string::npos)
                    break;
                s = comma + 1;
            }
        }
        if (parsed.size() != expected_arity(instr.opcode))
            throw ParseError(ParseErrorKind::OperandArity, line_no,
                             instr.mnemonic() + " takes " +
                                 std::to_string(expected_arity(instr.opcode)) + " operand(s), got " +
                                 std::to_string(parsed.size()));
        for (const auto &p : parsed)
            instr.operands.push_back(p.operand);
        for (std::size_t i = 0; i < parsed.size(); ++i) {
            auto *mem = std::get_if<MemOperand>(&instr.operands[i]);
            if (!mem || parsed[i].explicit_width)
                continue;
            const auto implied = implied_memory_width(instr);
            if (!implied)
                throw ParseError(ParseErrorKind::BadOperand, line_no,
                                 "memory operand size is ambiguous, use a ptr prefix");
            mem->width = *implied;
        }
        if (auto err = check_form(instr))
            throw ParseError(ParseErrorKind::BadOperand, line_no, instr.mnemonic() + ": " + *err);
        for (std::size_t i = 0; i < instr.operands.size(); ++i)
            if (std::holds_alternative<LabelRef>(instr.operands[i]))
                refs.push_back({program.instructions.size(), i, line_no});
        program.instructions.push_back(std::move(instr));
        if (end == text.size())
            break;
    }

    for (const auto &ref : refs) {
        auto &label = std::get<LabelRef>(program.instructions[ref.instr].operands[ref.operand]);
        const auto it = program.labels.find(label.name);
        if (it == program.labels.end())
            throw ParseError(ParseErrorKind::UnresolvedLabel, ref.line,
                             "unresolved label " + label.name);
        if (it->second <= ref.instr)
            throw ParseError(ParseErrorKind::BackwardBranch, ref.line,
                             "backward branch to " + label.name);
        label.target = it->second;
    }
    return program;
}

std::string render_instruction(const Instruction &instr)
{
    std::string out = instr.mnemonic();
    const auto implied = implied_memory_width(instr);
    for (std::size_t i = 0; i < instr.operands.size(); ++i) {
        const auto &op = instr.operands[i];
        bool show_width = false;
        if (const auto *m = std::get_if<MemOperand>(&op))
            show_width = !implied || *implied != m->width;
        out += (i == 0 ? " " : ", ") + render_operand(op, show_width);
    }
    if (instr.is_instrumentation)
        out += "  # instrumentation";
    return out;
}

std::string render_program(const Program &program)
{
    std::vector<std::vector<std::string>> labels_at(program.size() + 1);
    for (const auto &[name, index] : program.labels)
        labels_at[std::min(index, program.size())].push_back(name);

    std::string out;
    for (std::size_t i = 0; i <= program.size(); ++i) {
        for (const auto &name : labels_at[i])
            out += name + ":\n";
        if (i < program.size())
            out += render_instruction(program.instructions[i]) + "\n";
    }
    return out;
}

}  // namespace relfuzz::isa
