#include "patchprobe/source_model.hpp"

#include "patchprobe/errors.hpp"

#include <doctest.h>

using namespace patchprobe;

namespace {

const char* kMotivatingDiff =
    "--- a/ssl/s3_pkt.c\n"
    "+++ b/ssl/s3_pkt.c\n"
    "@@ -4,7 +4,7 @@ int ssl3_check_version(SSL *s)\n"
    "     int rv;\n"
    "     rv = 0;\n"
    "     if (s != NULL) {\n"
    "-        if (s->method->version >= TLS1_2_VERSION) {\n"
    "+        if (s->method->version == TLS1_2_VERSION) {\n"
    "             rv = 1;\n"
    "         }\n"
    "     }\n";

const char* kPatchedSource =
    "int ssl3_check_version(SSL *s)\n"
    "{\n"
    "    int rv;\n"
    "    rv = 0;\n"
    "    if (s != NULL) {\n"
    "        if (s->method->version == TLS1_2_VERSION) {\n"
    "            rv = 1;\n"
    "        }\n"
    "    }\n"
    "    return rv;\n"
    "}\n";

} // namespace

TEST_SUITE("source_model") {

TEST_CASE("hunk counting follows the unified format") {
    PatchDiff diff = parse_unified_diff("--- a/f.c\n+++ b/f.c\n@@ -1,2 +1,3 @@\n a\n+b\n c\n");
    REQUIRE(diff.hunks.size() == 1);
    int added = 0, deleted = 0, context = 0;
    for (const DiffLine& line : diff.hunks[0].lines) {
        if (line.tag == DiffLineTag::Added) ++added;
        if (line.tag == DiffLineTag::Deleted) ++deleted;
        if (line.tag == DiffLineTag::Context) ++context;
    }
    CHECK(added == 1);
    CHECK(deleted == 0);
    CHECK(context == 2);
}

TEST_CASE("declared counts must match the hunk body") {
    CHECK_THROWS_WITH_AS(parse_unified_diff("--- a/f.c\n+++ b/f.c\n@@ -1,1 +1,1 @@\n"),
                         doctest::Contains("MalformedDiff"), Error);
    try {
        parse_unified_diff("--- a/f.c\n+++ b/f.c\n@@ -1,1 +1,1 @@\n");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::MalformedDiff);
    }
}

TEST_CASE("two file sections are rejected") {
    const char* multi =
        "--- a/f.c\n+++ b/f.c\n@@ -1,1 +1,1 @@\n a\n"
        "--- a/g.c\n+++ b/g.c\n@@ -1,1 +1,1 @@\n a\n";
    try {
        parse_unified_diff(multi);
        FAIL("expected MultiFileDiff");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::MultiFileDiff);
    }
}

TEST_CASE("version-check hunk parses into one deleted and one added line") {
    PatchDiff diff = parse_unified_diff(kMotivatingDiff);
    CHECK(diff.file_path == "ssl/s3_pkt.c");
    CHECK(diff.added_lines().size() == 1);
    CHECK(diff.deleted_lines().size() == 1);
    CHECK(classify_patch(diff) == PatchKind::Edit);
    CHECK(diff.function_hint.value_or("") == "int ssl3_check_version(SSL *s)");
}

TEST_CASE("diff round-trips through serialization") {
    PatchDiff diff = parse_unified_diff(kMotivatingDiff);
    PatchDiff again = parse_unified_diff(serialize_diff(diff));
    REQUIRE(again.hunks.size() == diff.hunks.size());
    for (std::size_t h = 0; h < diff.hunks.size(); ++h) {
        CHECK(again.hunks[h].old_start == diff.hunks[h].old_start);
        CHECK(again.hunks[h].old_count == diff.hunks[h].old_count);
        CHECK(again.hunks[h].new_start == diff.hunks[h].new_start);
        CHECK(again.hunks[h].new_count == diff.hunks[h].new_count);
        REQUIRE(again.hunks[h].lines.size() == diff.hunks[h].lines.size());
        for (std::size_t i = 0; i < diff.hunks[h].lines.size(); ++i) {
            CHECK(again.hunks[h].lines[i].tag == diff.hunks[h].lines[i].tag);
            CHECK(again.hunks[h].lines[i].text == diff.hunks[h].lines[i].text);
        }
    }
}

TEST_CASE("patch kind classification") {
    auto parse_kind = [](const char* body) {
        return classify_patch(parse_unified_diff(body));
    };
    CHECK(parse_kind("--- a/f.c\n+++ b/f.c\n@@ -1,1 +1,2 @@\n a\n+b\n") == PatchKind::AddOnly);
    CHECK(parse_kind("--- a/f.c\n+++ b/f.c\n@@ -1,2 +1,1 @@\n a\n-b\n") == PatchKind::DeleteOnly);
    CHECK(parse_kind("--- a/f.c\n+++ b/f.c\n@@ -1,2 +1,2 @@\n a\n-b\n+c\n") == PatchKind::Edit);

    // whitespace-only changes do not count
    try {
        classify_patch(parse_unified_diff("--- a/f.c\n+++ b/f.c\n@@ -1,2 +1,2 @@\n a\n-  \n+\t\n"));
        FAIL("expected EmptyPatch");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::EmptyPatch);
    }
}

TEST_CASE("single-line function extracts with a return node") {
    AnnotatedFunction func = extract_function("int f(void){return 0;}\n", "f");
    CHECK(func.line_count() == 1);
    CHECK(func.name == "f");
    REQUIRE(!func.root.children.empty());
    CHECK(check_span_nesting(func.root, func.line_count()));
}

TEST_CASE("missing function raises FunctionNotFound") {
    try {
        extract_function("int g(void){return 0;}\n", "f");
        FAIL("expected FunctionNotFound");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::FunctionNotFound);
    }
}

TEST_CASE("prototypes are skipped in favor of the definition") {
    const char* text = "int f(int a);\nstatic int other;\nint f(int a)\n{\n    return a;\n}\n";
    AnnotatedFunction func = extract_function(text, "f");
    CHECK(func.file_start_line == 3);
    CHECK(func.line_count() == 4);
}

TEST_CASE("nested control structures keep the nesting invariant") {
    const char* text =
        "static int walk(int n, int *data)\n"
        "{\n"
        "    int total = 0;\n"
        "    for (int i = 0; i < n; i++) {\n"
        "        if (data[i] > 0) {\n"
        "            total += data[i];\n"
        "        } else {\n"
        "            while (data[i] < 0) {\n"
        "                data[i]++;\n"
        "                total--;\n"
        "            }\n"
        "            total++;\n"
        "        }\n"
        "    }\n"
        "    if (total > 100)\n"
        "        total = 100;\n"
        "    return total;\n"
        "}\n";
    AnnotatedFunction func = extract_function(text, "walk");
    CHECK(func.line_count() == 18);
    CHECK(check_span_nesting(func.root, func.line_count()));

    // the loop encloses lines 5..13 including the else branch
    auto path = node_path_to_line(func.root, 9);
    bool saw_loop = false;
    bool saw_else = false;
    for (const SyntaxNode* node : path) {
        if (node->kind == NodeKind::Loop) saw_loop = true;
        if (node->kind == NodeKind::Else) saw_else = true;
    }
    CHECK(saw_loop);
    CHECK(saw_else);
}

TEST_CASE("unbalanced function body raises UnbalancedBraces") {
    try {
        extract_function("int f(void) {\n  if (x) {\n", "f");
        FAIL("expected UnbalancedBraces");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::UnbalancedBraces);
    }
}

TEST_CASE("annotation marks exactly the matched diff lines") {
    PatchDiff diff = parse_unified_diff(kMotivatingDiff);
    AnnotatedFunction patched = extract_function(kPatchedSource, "ssl3_check_version",
                                                 VersionTag::Patched);
    AnnotatedFunction annotated = annotate_patch_lines(patched, diff);
    CHECK(annotated.patch_line_numbers() == std::vector<int>{6});

    // idempotent
    AnnotatedFunction again = annotate_patch_lines(annotated, diff);
    CHECK(again.patch_line_numbers() == std::vector<int>{6});

    std::string rendered = render_annotated(annotated);
    CHECK(rendered.find("== TLS1_2_VERSION) { //patch_code") != std::string::npos);
}

TEST_CASE("diff line missing from the function raises PatchLineNotFound") {
    PatchDiff diff = parse_unified_diff(
        "--- a/f.c\n+++ b/f.c\n@@ -1,1 +1,2 @@\n int g;\n+int added_line_not_present;\n");
    AnnotatedFunction func =
        extract_function("int f(void)\n{\n    return 0;\n}\n", "f", VersionTag::Patched);
    try {
        annotate_patch_lines(func, diff);
        FAIL("expected PatchLineNotFound");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::PatchLineNotFound);
    }
}

TEST_CASE("duplicate lines resolve to the occurrence nearest the hunk position") {
    const char* source =
        "void f(void)\n" // file line 1
        "{\n"
        "    step();\n"  // 3
        "    mark();\n"  // 4
        "    step();\n"  // 5
        "    mark();\n"  // 6  <- hunk points here
        "    step();\n"
        "}\n";
    PatchDiff diff = parse_unified_diff(
        "--- a/f.c\n+++ b/f.c\n@@ -5,2 +5,3 @@\n     step();\n+    mark();\n     step();\n");
    AnnotatedFunction func = extract_function(source, "f", VersionTag::Patched);
    AnnotatedFunction annotated = annotate_patch_lines(func, diff);
    CHECK(annotated.patch_line_numbers() == std::vector<int>{6});
}

} // TEST_SUITE
