#include "patchprobe/enhance.hpp"

#include "patchprobe/errors.hpp"
#include "patchprobe/source_model.hpp"

#include <doctest.h>

#include <algorithm>

using namespace patchprobe;

namespace {

AnnotatedFunction annotated_fixture(const char* source, const char* name,
                                    std::vector<int> patch_lines,
                                    VersionTag version = VersionTag::Patched) {
    AnnotatedFunction func = extract_function(source, name, version);
    for (int n : patch_lines) {
        func.lines[static_cast<std::size_t>(n - 1)].is_patch_line = true;
    }
    return func;
}

// patch on the if-condition; lines 4 and 10 touch the same variables
const char* kFlowFixture =
    "static int check_frame(struct frame *fr, int limit)\n" // 1
    "{\n"                                                   // 2
    "    int rc;\n"                                         // 3
    "    rc = fr->len + limit;\n"                           // 4
    "    if (fr->len > limit) {\n"                          // 5  <- patch
    "        rc = 0;\n"                                     // 6
    "    } else {\n"                                        // 7
    "        log_frame(fr);\n"                              // 8
    "    }\n"                                               // 9
    "    audit(fr->len, limit);\n"                          // 10
    "    return rc;\n"                                      // 11
    "}\n";                                                  // 12

} // namespace

TEST_SUITE("enhance") {

TEST_CASE("assignment patch line splits defined and used") {
    AnnotatedFunction func = annotated_fixture(
        "void f(void)\n{\n    x = a + b;\n}\n", "f", {3});
    VariableSet vars = collect_patch_variables(func);
    CHECK(vars.defined == std::set<std::string>{"x"});
    CHECK(vars.used == std::set<std::string>{"a", "b"});
}

TEST_CASE("field chains flatten into component identifiers") {
    AnnotatedFunction func = annotated_fixture(
        "void f(void)\n{\n    if (s->session->sess_cert == NULL)\n        abort_handshake();\n}\n",
        "f", {3});
    VariableSet vars = collect_patch_variables(func);
    CHECK(vars.defined.empty());
    CHECK(vars.used == std::set<std::string>{"s", "session", "sess_cert"});
}

TEST_CASE("bare return contributes nothing") {
    AnnotatedFunction func = annotated_fixture("int f(void)\n{\n    return 0;\n}\n", "f", {3});
    VariableSet vars = collect_patch_variables(func);
    CHECK(vars.defined.empty());
    CHECK(vars.used.empty());
}

TEST_CASE("no patch lines raises NoPatchLines") {
    AnnotatedFunction func = extract_function("int f(void)\n{\n    return 0;\n}\n", "f");
    try {
        collect_patch_variables(func);
        FAIL("expected NoPatchLines");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NoPatchLines);
    }
}

TEST_CASE("data flow finds the lines sharing patch variables") {
    AnnotatedFunction func = annotated_fixture(kFlowFixture, "check_frame", {5});
    VariableSet vars = collect_patch_variables(func);
    CHECK(vars.used == std::set<std::string>{"fr", "len", "limit"});

    std::set<int> flow = dataflow_slice(func, vars);
    CHECK(flow.count(4) == 1);
    CHECK(flow.count(10) == 1);
    CHECK(flow.count(3) == 0);  // rc only
    CHECK(flow.count(5) == 0);  // the patch line itself is excluded
}

TEST_CASE("empty variable set yields an empty data-flow slice") {
    AnnotatedFunction func = annotated_fixture(kFlowFixture, "check_frame", {5});
    CHECK(dataflow_slice(func, VariableSet{}).empty());
}

TEST_CASE("data-flow slice is exactly the lines mentioning the variable") {
    const char* source =
        "void f(void)\n"      // 1
        "{\n"                 // 2
        "    int v = 0;\n"    // 3
        "    v = v + 1;\n"    // 4  <- patch
        "    use(v);\n"       // 5
        "    other();\n"      // 6
        "    report(v);\n"    // 7
        "}\n";                // 8
    AnnotatedFunction func = annotated_fixture(source, "f", {4});
    VariableSet vars = collect_patch_variables(func);
    std::set<int> flow = dataflow_slice(func, vars);
    CHECK(flow == std::set<int>{3, 5, 7});
}

TEST_CASE("control flow captures header, first statement and follower") {
    const char* source =
        "void f(int c)\n"       // 1
        "{\n"                   // 2
        "    if (c) {\n"        // 3
        "        first();\n"    // 4
        "        patchme();\n"  // 5 <- patch
        "    }\n"               // 6
        "    next_stmt();\n"    // 7
        "}\n";
    AnnotatedFunction func = annotated_fixture(source, "f", {5});
    std::set<int> cf = controlflow_slice(func);
    CHECK(cf.count(3) == 1); // if header
    CHECK(cf.count(4) == 1); // first statement of the block
    CHECK(cf.count(7) == 1); // statement after the block
}

TEST_CASE("patch inside an if pulls in the else branch") {
    AnnotatedFunction func = annotated_fixture(kFlowFixture, "check_frame", {6});
    std::set<int> cf = controlflow_slice(func);
    CHECK(cf.count(5) == 1);  // if header
    CHECK(cf.count(7) == 1);  // else header
    CHECK(cf.count(8) == 1);  // else first statement
    CHECK(cf.count(10) == 1); // statement after the if-else block
}

TEST_CASE("top-level patch has no control-flow context") {
    const char* source = "void f(void)\n{\n    a = 1;\n    b = 2;\n}\n";
    AnnotatedFunction func = annotated_fixture(source, "f", {3});
    CHECK(controlflow_slice(func).empty());
}

TEST_CASE("macros resolve against the fixture project") {
    const std::string root = std::string(PATCHPROBE_FIXTURE_DIR) + "/macro_project";
    ProjectIndex index = ProjectIndex::scan(root);
    CHECK(index.definition_count() >= 5);

    const char* source =
        "int negotiate(struct ssl_st *s)\n"
        "{\n"
        "    if (s->version >= TLS1_2_VERSION)\n"
        "        return 1;\n"
        "    return 0;\n"
        "}\n";
    AnnotatedFunction func = annotated_fixture(source, "negotiate", {3});
    MacroResolution macros = resolve_macros(func, index, std::set<int>{3});
    CHECK(macros.substitutions.at("TLS1_2_VERSION") == "0x0303");
    CHECK(macros.unresolved.empty());
}

TEST_CASE("unknown identifiers stay verbatim and are reported") {
    const std::string root = std::string(PATCHPROBE_FIXTURE_DIR) + "/macro_project";
    ProjectIndex index = ProjectIndex::scan(root);
    const char* source = "int f(void)\n{\n    return UNDEFINED_SENTINEL;\n}\n";
    AnnotatedFunction func = annotated_fixture(source, "f", {3});
    MacroResolution macros = resolve_macros(func, index, std::set<int>{3});
    CHECK(macros.substitutions.count("UNDEFINED_SENTINEL") == 0);
    REQUIRE(macros.unresolved.size() == 1);
    CHECK(macros.unresolved[0] == "UNDEFINED_SENTINEL");
}

TEST_CASE("conflicting defines prefer the nearest scope") {
    const std::string root = std::string(PATCHPROBE_FIXTURE_DIR) + "/macro_project";
    ProjectIndex index = ProjectIndex::scan(root);
    // BUF_LIMIT is 64 in src/local.h and 128 in include/proto.h
    const char* source =
        "int f(int n)\n{\n    if (n > BUF_LIMIT)\n        n = 0;\n    return n;\n}\n";
    AnnotatedFunction func = annotated_fixture(source, "f", {3});

    MacroResolution near = resolve_macros(func, index, std::set<int>{3}, root + "/src/app.c");
    CHECK(near.substitutions.at("BUF_LIMIT") == "64");
    CHECK(near.sources.at("BUF_LIMIT").find("local.h") != std::string::npos);

    MacroResolution far =
        resolve_macros(func, index, std::set<int>{3}, root + "/include/unrelated.c");
    CHECK(far.substitutions.at("BUF_LIMIT") == "128");
}

TEST_CASE("function-like macros expand single-expression bodies only") {
    const std::string root = std::string(PATCHPROBE_FIXTURE_DIR) + "/macro_project";
    ProjectIndex index = ProjectIndex::scan(root);
    const char* source =
        "int f(int n)\n{\n    n = ALIGN_UP(n, 8);\n    COMPLEX_HELPER(n);\n    return n;\n}\n";
    AnnotatedFunction func = annotated_fixture(source, "f", {3, 4});
    MacroResolution macros = resolve_macros(func, index, std::set<int>{3, 4});
    REQUIRE(macros.substitutions.count("ALIGN_UP()") == 1);
    CHECK(std::count(macros.unresolved.begin(), macros.unresolved.end(),
                     std::string("COMPLEX_HELPER")) == 1);

    std::string substituted =
        apply_substitutions("    n = ALIGN_UP(n, 8);", macros.substitutions);
    CHECK(substituted == "    n = (((n) + (8) - 1) & ~((8) - 1));");
}

TEST_CASE("slice equals the patch lines when no enhancement applies") {
    AnnotatedFunction func = annotated_fixture("void f(void)\n{\n    lonely();\n}\n", "f", {3});
    EnhancedSlice slice = build_enhanced_slice(func, {}, {}, MacroResolution{});
    REQUIRE(slice.lines.size() == 1);
    CHECK(slice.lines[0].number == 3);
    CHECK(slice.lines[0].origin == SliceOrigin::Patch);
}

TEST_CASE("slice merges origins with patch first, then dataflow") {
    AnnotatedFunction func = annotated_fixture(kFlowFixture, "check_frame", {5});
    VariableSet vars = collect_patch_variables(func);
    std::set<int> df = dataflow_slice(func, vars);
    std::set<int> cf = controlflow_slice(func);
    CHECK(!df.empty());
    CHECK(!cf.empty());

    EnhancedSlice slice = build_enhanced_slice(func, df, cf, MacroResolution{});

    // monotonicity and locality
    bool saw_patch = false;
    int previous = 0;
    for (const SliceLine& line : slice.lines) {
        CHECK(line.number > previous);
        previous = line.number;
        CHECK(line.number >= 1);
        CHECK(line.number <= func.line_count());
        if (line.number == 5) {
            saw_patch = true;
            CHECK(line.origin == SliceOrigin::Patch);
        }
    }
    CHECK(saw_patch);

    // line 10 is in both df and cf: dataflow wins
    for (const SliceLine& line : slice.lines) {
        if (line.number == 10) CHECK(line.origin == SliceOrigin::DataFlow);
    }
}

TEST_CASE("every data-flow line mentions a patch variable") {
    AnnotatedFunction func = annotated_fixture(kFlowFixture, "check_frame", {5});
    VariableSet vars = collect_patch_variables(func);
    std::set<std::string> watched = vars.all();
    for (int n : dataflow_slice(func, vars)) {
        bool mentions = false;
        for (const Token& t : func.line_tokens(n)) {
            if (t.kind == TokenKind::Identifier && watched.count(t.lexeme)) mentions = true;
        }
        CHECK(mentions);
    }
}

TEST_CASE("slice text carries macro substitutions") {
    const std::string root = std::string(PATCHPROBE_FIXTURE_DIR) + "/macro_project";
    ProjectIndex index = ProjectIndex::scan(root);
    const char* source =
        "int negotiate(struct ssl_st *s)\n"
        "{\n"
        "    if (s->version >= TLS1_2_VERSION)\n"
        "        return 1;\n"
        "    return 0;\n"
        "}\n";
    AnnotatedFunction func = annotated_fixture(source, "negotiate", {3});
    MacroResolution macros = resolve_macros(func, index, std::set<int>{3});
    EnhancedSlice slice = build_enhanced_slice(func, {}, {}, macros);
    REQUIRE(!slice.lines.empty());
    CHECK(slice.lines[0].text.find("0x0303") != std::string::npos);
    CHECK(slice.lines[0].text.find("TLS1_2_VERSION") == std::string::npos);
}

TEST_CASE("identical inputs produce byte-identical slices") {
    AnnotatedFunction func = annotated_fixture(kFlowFixture, "check_frame", {5});
    VariableSet vars = collect_patch_variables(func);
    std::set<int> df = dataflow_slice(func, vars);
    std::set<int> cf = controlflow_slice(func);
    EnhancedSlice a = build_enhanced_slice(func, df, cf, MacroResolution{});
    EnhancedSlice b = build_enhanced_slice(func, df, cf, MacroResolution{});
    CHECK(a.render_text() == b.render_text());
    REQUIRE(a.lines.size() == b.lines.size());
    for (std::size_t i = 0; i < a.lines.size(); ++i) {
        CHECK(a.lines[i].origin == b.lines[i].origin);
    }
}

} // TEST_SUITE
