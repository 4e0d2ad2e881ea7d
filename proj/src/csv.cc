// Copyright 2026 The SQRS Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "sqrs/csv.h"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <istream>

#include "sqrs/errors.h"

namespace sqrs::csv {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::vector<std::string> split(const std::string &line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

Table read(std::istream &in) {
    Table t;
    std::string line;
    bool have_header = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        if (line[0] == '#') {
            t.comments.push_back(line);
            continue;
        }
        if (!have_header) {
            t.header = split(line);
            have_header = true;
            continue;
        }
        auto row = split(line);
        if (row.size() != t.header.size()) {
            throw Error("csv row has " + std::to_string(row.size()) + " fields, header has " +
                        std::to_string(t.header.size()));
        }
        t.rows.push_back(std::move(row));
    }
    if (!have_header) {
        throw Error("csv input has no header line");
    }
    return t;
}

bool Table::has_column(const std::string &name) const {
    return std::find(header.begin(), header.end(), name) != header.end();
}

size_t Table::column(const std::string &name) const {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
        throw Error("csv column '" + name + "' missing");
    }
    return static_cast<size_t>(it - header.begin());
}

double parse_double(const std::string &s) {
    try {
        size_t used = 0;
        double v = std::stod(s, &used);
        if (used != s.size()) {
            throw Error("trailing characters in number '" + s + "'");
        }
        return v;
    } catch (const std::logic_error &) {
        throw Error("not a number: '" + s + "'");
    }
}

long long parse_int(const std::string &s) {
    long long v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) {
        throw Error("not an integer: '" + s + "'");
    }
    return v;
}

unsigned long long parse_uint(const std::string &s) {
    unsigned long long v = 0;
    int base = 10;
    const char *b = s.data();
    const char *e = s.data() + s.size();
    if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) {
        base = 16;
        b += 2;
    }
    auto [p, ec] = std::from_chars(b, e, v, base);
    if (ec != std::errc() || p != e) {
        throw Error("not an unsigned integer: '" + s + "'");
    }
    return v;
}

}  // namespace sqrs::csv
