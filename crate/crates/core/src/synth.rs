//! Seeded synthetic code/comment corpora for tests, demos and the
//! acceptance harness.
//!
//! Each sample instantiates one of a fixed set of method templates with a
//! noun, so comments depend both on identifier names (the noun) and on
//! structure that identifiers do not carry (API calls, control flow).

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::CodeSample;
use crate::lang::Lang;

const NOUNS: &[(&str, &str)] = &[
    ("item", "items"),
    ("price", "prices"),
    ("score", "scores"),
    ("order", "orders"),
    ("user", "users"),
    ("file", "files"),
    ("record", "records"),
    ("word", "words"),
    ("node", "nodes"),
    ("task", "tasks"),
    ("event", "events"),
    ("message", "messages"),
    ("token", "tokens"),
    ("entry", "entries"),
    ("page", "pages"),
    ("city", "cities"),
    ("book", "books"),
    ("student", "students"),
    ("account", "accounts"),
    ("color", "colors"),
    ("product", "products"),
    ("player", "players"),
    ("ticket", "tickets"),
    ("sample", "samples"),
    ("weight", "weights"),
    ("song", "songs"),
    ("invoice", "invoices"),
    ("request", "requests"),
    ("letter", "letters"),
    ("card", "cards"),
    ("device", "devices"),
    ("photo", "photos"),
    ("review", "reviews"),
    ("comment", "comments"),
    ("report", "reports"),
    ("payment", "payments"),
    ("image", "images"),
    ("ingredient", "ingredients"),
    ("vote", "votes"),
    ("match", "matches"),
    ("route", "routes"),
    ("sensor", "sensors"),
    ("reading", "readings"),
    ("packet", "packets"),
    ("session", "sessions"),
    ("channel", "channels"),
    ("employee", "employees"),
    ("customer", "customers"),
    ("address", "addresses"),
    ("folder", "folders"),
    ("rule", "rules"),
    ("job", "jobs"),
    ("step", "steps"),
    ("field", "fields"),
    ("column", "columns"),
    ("row", "rows"),
    ("cell", "cells"),
    ("edge", "edges"),
    ("vertex", "vertices"),
    ("pixel", "pixels"),
    ("frame", "frames"),
    ("chunk", "chunks"),
    ("block", "blocks"),
    ("query", "queries"),
    ("grade", "grades"),
    ("course", "courses"),
    ("lesson", "lessons"),
    ("movie", "movies"),
    ("album", "albums"),
    ("track", "tracks"),
    ("artist", "artists"),
    ("recipe", "recipes"),
    ("flight", "flights"),
    ("hotel", "hotels"),
    ("seat", "seats"),
    ("room", "rooms"),
    ("guest", "guests"),
    ("bid", "bids"),
    ("offer", "offers"),
    ("coupon", "coupons"),
    ("bonus", "bonuses"),
];

const JAVA: &[(&str, &str)] = &[
    (
        "{T} sum{N}({T}[] {n}) {\n    {T} {acc} = 0;\n    for (int {i} = 0; {i} < {n}.length; {i}++) {\n        {acc} += {n}[{i}];\n    }\n    return {acc};\n}\n",
        "returns the sum of all {n}",
    ),
    (
        "{T} max{S}({T}[] {n}) {\n    {T} best = {n}[0];\n    for ({T} {s} : {n}) {\n        best = Math.max(best, {s});\n    }\n    return best;\n}\n",
        "returns the largest {s} in the array",
    ),
    (
        "int count{N}(List<String> {n}, String target) {\n    int count = 0;\n    for (String {s} : {n}) {\n        if ({s}.equals(target)) {\n            count++;\n        }\n    }\n    return count;\n}\n",
        "counts how many {n} equal the target",
    ),
    (
        "boolean has{S}(Set<String> {n}, String name) {\n    return {n}.contains(name);\n}\n",
        "checks whether the {s} set contains the name",
    ),
    (
        "void print{N}(List<String> {n}) {\n    for (String {s} : {n}) {\n        System.out.println({s});\n    }\n}\n",
        "prints each {s} on its own line",
    ),
    (
        "void close{S}(Reader {s}Reader) {\n    try {\n        {s}Reader.close();\n    } catch (IOException e) {\n        e.printStackTrace();\n    }\n}\n",
        "closes the {s} reader and ignores errors",
    ),
    (
        "boolean no{N}(List<Integer> {n}) {\n    return {n} == null || {n}.isEmpty();\n}\n",
        "returns true if there are no {n}",
    ),
    (
        "double average{S}(int[] {n}) {\n    if ({n}.length == 0) {\n        return 0;\n    }\n    double {acc} = 0;\n    for (int {s} : {n}) {\n        {acc} += {s};\n    }\n    return {acc} / {n}.length;\n}\n",
        "computes the average {s} value",
    ),
    (
        "int indexOf{S}(String[] {n}, String key) {\n    for (int {i} = 0; {i} < {n}.length; {i}++) {\n        if ({n}[{i}].equals(key)) {\n            return {i};\n        }\n    }\n    return -1;\n}\n",
        "finds the position of the key among the {n}",
    ),
    (
        "void remove{S}(List<String> {n}, int index) {\n    if (index >= 0 && index < {n}.size()) {\n        {n}.remove(index);\n    }\n}\n",
        "removes the {s} at the given index",
    ),
    (
        "List<String> copy{N}(List<String> {n}) {\n    List<String> result = new ArrayList<>();\n    result.addAll({n});\n    return result;\n}\n",
        "returns a copy of the {n} list",
    ),
    (
        "int clamp{S}(int {s}, int low, int high) {\n    if ({s} < low) {\n        return low;\n    }\n    if ({s} > high) {\n        return high;\n    }\n    return {s};\n}\n",
        "limits the {s} to the range from low to high",
    ),
    (
        "String join{N}(List<String> {n}, String sep) {\n    StringBuilder builder = new StringBuilder();\n    for (int {i} = 0; {i} < {n}.size(); {i}++) {\n        if ({i} > 0) {\n            builder.append(sep);\n        }\n        builder.append({n}.get({i}));\n    }\n    return builder.toString();\n}\n",
        "joins the {n} with a separator",
    ),
    (
        "void sort{N}(int[] {n}) {\n    Arrays.sort({n});\n}\n",
        "sorts the {n} in ascending order",
    ),
];

const PYTHON: &[(&str, &str)] = &[
    (
        "def sum_{n}({n}):\n    {acc} = 0\n    for {s} in {n}:\n        {acc} += {s}\n    return {acc}\n",
        "returns the sum of all {n}",
    ),
    (
        "def max_{s}({n}):\n    best = {n}[0]\n    for {s} in {n}:\n        if {s} > best:\n            best = {s}\n    return best\n",
        "returns the largest {s} in the list",
    ),
    (
        "def count_{n}({n}, target):\n    count = 0\n    for {s} in {n}:\n        if {s} == target:\n            count += 1\n    return count\n",
        "counts how many {n} equal the target",
    ),
    (
        "def has_{s}({n}, name):\n    return name in {n}\n",
        "checks whether the {s} collection contains the name",
    ),
    (
        "def print_{n}({n}):\n    for {s} in {n}:\n        print({s})\n",
        "prints each {s} on its own line",
    ),
    (
        "def read_{n}(path):\n    with open(path) as handle:\n        return [line.strip() for line in handle]\n",
        "reads the {n} from a file one per line",
    ),
    (
        "def no_{n}({n}):\n    return not {n}\n",
        "returns true if there are no {n}",
    ),
    (
        "def average_{s}({n}):\n    if not {n}:\n        return 0\n    return sum({n}) / len({n})\n",
        "computes the average {s} value",
    ),
    (
        "def index_of_{s}({n}, key):\n    for {i}, {s} in enumerate({n}):\n        if {s} == key:\n            return {i}\n    return -1\n",
        "finds the position of the key among the {n}",
    ),
    (
        "def remove_{s}({n}, index):\n    if 0 <= index < len({n}):\n        del {n}[index]\n",
        "removes the {s} at the given index",
    ),
    (
        "def copy_{n}({n}):\n    result = list({n})\n    return result\n",
        "returns a copy of the {n} list",
    ),
    (
        "def clamp_{s}({s}, low, high):\n    if {s} < low:\n        return low\n    if {s} > high:\n        return high\n    return {s}\n",
        "limits the {s} to the range from low to high",
    ),
    (
        "def join_{n}({n}, sep):\n    return sep.join(str({s}) for {s} in {n})\n",
        "joins the {n} with a separator",
    ),
    (
        "def sort_{n}({n}):\n    return sorted({n})\n",
        "sorts the {n} in ascending order",
    ),
];

const JAVA_TYPES: &[&str] = &["int", "long", "double"];
const LOOP_VARS: &[&str] = &["i", "j", "k", "idx"];
const ACCUMULATORS: &[&str] = &["total", "acc", "sum", "result"];

fn capitalise(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

/// Number of distinct templates for a language.
pub fn template_count(lang: Lang) -> usize {
    match lang {
        Lang::Java => JAVA.len(),
        Lang::Python => PYTHON.len(),
    }
}

/// `n` samples with ids `{prefix}{index:05}`, fully determined by `seed`.
pub fn synth_corpus(lang: Lang, n: usize, seed: u64, prefix: &str) -> Vec<CodeSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let templates = match lang {
        Lang::Java => JAVA,
        Lang::Python => PYTHON,
    };
    (0..n)
        .map(|idx| {
            let (code, comment) = templates[rng.gen_range(0..templates.len())];
            let (s, p) = *NOUNS.choose(&mut rng).expect("nouns");
            let ty = *JAVA_TYPES.choose(&mut rng).expect("types");
            let i = *LOOP_VARS.choose(&mut rng).expect("loop vars");
            let acc = *ACCUMULATORS.choose(&mut rng).expect("accumulators");
            // Python's builtin `sum` is used by one template
            let acc = if lang == Lang::Python && acc == "sum" {
                "running"
            } else {
                acc
            };
            let fill = |t: &str| {
                t.replace("{N}", &capitalise(p))
                    .replace("{S}", &capitalise(s))
                    .replace("{n}", p)
                    .replace("{s}", s)
                    .replace("{T}", ty)
                    .replace("{i}", i)
                    .replace("{acc}", acc)
            };
            CodeSample {
                id: format!("{prefix}{idx:05}"),
                code: fill(code),
                comment: fill(comment),
                lang,
            }
        })
        .collect()
}
