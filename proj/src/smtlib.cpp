#include "patchprobe/smtlib.hpp"

#include <cctype>
#include <chrono>
#include <cstdlib>
#include <cstring>
#include <sstream>

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

namespace patchprobe {

namespace {

std::string slot_name(int slot) {
    return "s" + std::to_string(slot);
}

std::string bv_const(std::uint64_t value, int width) {
    std::uint64_t mask = width >= 64 ? ~0ull : ((1ull << width) - 1);
    std::ostringstream out;
    out << "(_ bv" << (value & mask) << " " << width << ")";
    return out.str();
}

struct Emitter {
    int width;
    std::vector<std::string> divisor_terms;

    std::string zero() const { return bv_const(0, width); }
    std::string one() const { return bv_const(1, width); }

    std::string to_bool(const std::string& term) const {
        return "(distinct " + term + " " + zero() + ")";
    }
    std::string from_bool(const std::string& cond) const {
        return "(ite " + cond + " " + one() + " " + zero() + ")";
    }

    std::string emit(const ExprPtr& e) {
        switch (e->kind) {
        case Expr::Kind::Variable:
            return slot_name(e->var_index);
        case Expr::Kind::Constant:
            return bv_const(e->value, width);
        case Expr::Kind::Unary: {
            std::string a = emit(e->operands[0]);
            switch (e->unary_op) {
            case UnaryOp::LogicalNot: return from_bool("(= " + a + " " + zero() + ")");
            case UnaryOp::BitNot: return "(bvnot " + a + ")";
            case UnaryOp::Negate: return "(bvneg " + a + ")";
            }
            return a;
        }
        case Expr::Kind::Binary: {
            std::string a = emit(e->operands[0]);
            std::string b = emit(e->operands[1]);
            switch (e->binary_op) {
            case BinaryOp::Eq: return from_bool("(= " + a + " " + b + ")");
            case BinaryOp::Ne: return from_bool("(distinct " + a + " " + b + ")");
            case BinaryOp::Lt: return from_bool("(bvult " + a + " " + b + ")");
            case BinaryOp::Le: return from_bool("(bvule " + a + " " + b + ")");
            case BinaryOp::Gt: return from_bool("(bvugt " + a + " " + b + ")");
            case BinaryOp::Ge: return from_bool("(bvuge " + a + " " + b + ")");
            case BinaryOp::Add: return "(bvadd " + a + " " + b + ")";
            case BinaryOp::Sub: return "(bvsub " + a + " " + b + ")";
            case BinaryOp::Mul: return "(bvmul " + a + " " + b + ")";
            case BinaryOp::Div:
                divisor_terms.push_back(b);
                return "(bvudiv " + a + " " + b + ")";
            case BinaryOp::Mod:
                divisor_terms.push_back(b);
                return "(bvurem " + a + " " + b + ")";
            case BinaryOp::BitAnd: return "(bvand " + a + " " + b + ")";
            case BinaryOp::BitOr: return "(bvor " + a + " " + b + ")";
            case BinaryOp::BitXor: return "(bvxor " + a + " " + b + ")";
            case BinaryOp::Shl: return "(bvshl " + a + " " + b + ")";
            case BinaryOp::Shr: return "(bvlshr " + a + " " + b + ")";
            case BinaryOp::LogicalAnd:
                return from_bool("(and " + to_bool(a) + " " + to_bool(b) + ")");
            case BinaryOp::LogicalOr:
                return from_bool("(or " + to_bool(a) + " " + to_bool(b) + ")");
            }
            return a;
        }
        case Expr::Kind::Call:
            break; // flattened away before emission
        }
        return zero();
    }
};

} // namespace

std::string emit_equivalence_script(const ExprPtr& e1, const ExprPtr& e2, int num_slots,
                                    int width, bool ask_model) {
    Emitter emitter{width, {}};
    const std::string t1 = emitter.to_bool(emitter.emit(e1));
    const std::string t2 = emitter.to_bool(emitter.emit(e2));

    std::ostringstream script;
    script << "(set-option :print-success false)\n";
    script << "(set-logic QF_BV)\n";
    for (int s = 0; s < num_slots; ++s) {
        script << "(declare-const " << slot_name(s) << " (_ BitVec " << width << "))\n";
    }
    script << "(define-fun defok () Bool ";
    if (emitter.divisor_terms.empty()) {
        script << "true";
    } else {
        script << "(and";
        for (const std::string& d : emitter.divisor_terms) {
            script << " (distinct " << d << " " << bv_const(0, width) << ")";
        }
        script << ")";
    }
    script << ")\n";
    script << "(define-fun t1 () Bool " << t1 << ")\n";
    script << "(define-fun t2 () Bool " << t2 << ")\n";
    script << "(assert defok)\n";
    script << "(push 1)\n(check-sat)\n(pop 1)\n";
    script << "(push 1)\n(assert (distinct t1 t2))\n(check-sat)\n";
    if (ask_model && num_slots > 0) {
        script << "(get-value (";
        for (int s = 0; s < num_slots; ++s) {
            if (s > 0) script << " ";
            script << slot_name(s);
        }
        script << "))\n";
    }
    script << "(pop 1)\n";
    script << "(push 1)\n(assert (= t1 t2))\n(check-sat)\n(pop 1)\n";
    return script.str();
}

std::optional<std::string> run_subprocess(const std::string& path,
                                          const std::vector<std::string>& args,
                                          const std::string& input, int timeout_ms) {
    int in_pipe[2];
    int out_pipe[2];
    if (pipe(in_pipe) != 0) return std::nullopt;
    if (pipe(out_pipe) != 0) {
        close(in_pipe[0]);
        close(in_pipe[1]);
        return std::nullopt;
    }

    pid_t pid = fork();
    if (pid < 0) {
        close(in_pipe[0]);
        close(in_pipe[1]);
        close(out_pipe[0]);
        close(out_pipe[1]);
        return std::nullopt;
    }
    if (pid == 0) {
        dup2(in_pipe[0], STDIN_FILENO);
        dup2(out_pipe[1], STDOUT_FILENO);
        dup2(out_pipe[1], STDERR_FILENO);
        close(in_pipe[0]);
        close(in_pipe[1]);
        close(out_pipe[0]);
        close(out_pipe[1]);
        std::vector<char*> argv;
        argv.push_back(const_cast<char*>(path.c_str()));
        for (const std::string& a : args) argv.push_back(const_cast<char*>(a.c_str()));
        argv.push_back(nullptr);
        execvp(path.c_str(), argv.data());
        _exit(127);
    }

    close(in_pipe[0]);
    close(out_pipe[1]);

    // write the script, then close stdin so the solver terminates
    std::size_t written = 0;
    while (written < input.size()) {
        ssize_t n = write(in_pipe[1], input.data() + written, input.size() - written);
        if (n <= 0) break;
        written += static_cast<std::size_t>(n);
    }
    close(in_pipe[1]);

    std::string output;
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
    char buffer[4096];
    bool timed_out = false;
    while (true) {
        auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
                             deadline - std::chrono::steady_clock::now())
                             .count();
        if (remaining <= 0) {
            timed_out = true;
            break;
        }
        struct pollfd pfd = {out_pipe[0], POLLIN, 0};
        int rc = poll(&pfd, 1, static_cast<int>(remaining));
        if (rc <= 0) {
            timed_out = rc == 0;
            break;
        }
        ssize_t n = read(out_pipe[0], buffer, sizeof(buffer));
        if (n <= 0) break;
        output.append(buffer, static_cast<std::size_t>(n));
    }
    close(out_pipe[0]);

    if (timed_out) {
        kill(pid, SIGKILL);
        waitpid(pid, nullptr, 0);
        return std::nullopt;
    }
    int status = 0;
    waitpid(pid, &status, 0);
    if (WIFEXITED(status) && WEXITSTATUS(status) == 127) return std::nullopt;
    return output;
}

namespace {

std::vector<std::string> answer_lines(const std::string& output) {
    std::vector<std::string> lines;
    std::stringstream ss(output);
    std::string line;
    while (std::getline(ss, line)) {
        if (line == "sat" || line == "unsat" || line == "unknown") lines.push_back(line);
    }
    return lines;
}

std::optional<std::uint64_t> parse_bv_value(const std::string& text) {
    if (text.rfind("#x", 0) == 0) return std::strtoull(text.c_str() + 2, nullptr, 16);
    if (text.rfind("#b", 0) == 0) return std::strtoull(text.c_str() + 2, nullptr, 2);
    if (text.rfind("bv", 0) == 0) return std::strtoull(text.c_str() + 2, nullptr, 10);
    if (!text.empty() && std::isdigit(static_cast<unsigned char>(text[0]))) {
        return std::strtoull(text.c_str(), nullptr, 10);
    }
    return std::nullopt;
}

// "((s0 #x0304) (s1 (_ bv7 16)))" -> slot values
std::vector<std::uint64_t> parse_model(const std::string& output, int num_slots) {
    std::vector<std::uint64_t> slots(static_cast<std::size_t>(num_slots), 0);
    for (int s = 0; s < num_slots; ++s) {
        const std::string needle = "(" + slot_name(s) + " ";
        auto pos = output.find(needle);
        if (pos == std::string::npos) continue;
        pos += needle.size();
        while (pos < output.size() && (output[pos] == ' ' || output[pos] == '(')) {
            if (output[pos] == '(') {
                // "(_ bvN W)" form: skip to the bv token
                auto bv = output.find("bv", pos);
                if (bv == std::string::npos) break;
                pos = bv;
                break;
            }
            ++pos;
        }
        std::size_t end = pos;
        while (end < output.size() && output[end] != ')' && output[end] != ' ' &&
               output[end] != '\n') {
            ++end;
        }
        if (auto value = parse_bv_value(output.substr(pos, end - pos))) {
            slots[static_cast<std::size_t>(s)] = *value;
        }
    }
    return slots;
}

} // namespace

SmtOutcome compare_smt(const ExprPtr& e1, const ExprPtr& e2, int num_slots, int width,
                       const SolverOptions& opts) {
    const std::string script = emit_equivalence_script(e1, e2, num_slots, width, true);
    auto output = run_subprocess(opts.solver_path, opts.solver_args, script, opts.timeout_ms);
    if (!output) {
        return {EquivValue::Unknown, std::nullopt, "solver subprocess failed or timed out"};
    }

    std::vector<std::string> answers = answer_lines(*output);
    if (answers.size() != 3) {
        return {EquivValue::Unknown, std::nullopt,
                "unexpected solver output (" + std::to_string(answers.size()) + " answers)"};
    }
    if (answers[0] != "sat") {
        return {EquivValue::Unknown, std::nullopt, "no admissible assignments (zero divisors)"};
    }
    if (answers[1] == "unsat") return {EquivValue::Equal, std::nullopt, ""};
    if (answers[2] == "unsat" && answers[1] == "sat") {
        return {EquivValue::Negated, std::nullopt, ""};
    }
    if (answers[1] == "sat" && answers[2] == "sat") {
        return {EquivValue::Inequivalent, parse_model(*output, num_slots), ""};
    }
    return {EquivValue::Unknown, std::nullopt, "solver answered unknown"};
}

} // namespace patchprobe
