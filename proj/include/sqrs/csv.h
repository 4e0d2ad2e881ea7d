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

#ifndef SQRS_CSV_H
#define SQRS_CSV_H

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace sqrs::csv {

/// Shortest round-trippable decimal form ("%.17g").
std::string fmt(double v);

/// A parsed CSV file: lines starting with '#' are collected as comments, the
/// first other line is the header.
struct Table {
    std::vector<std::string> comments;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Column position; throws sqrs::Error when absent.
    size_t column(const std::string &name) const;
    bool has_column(const std::string &name) const;
};

Table read(std::istream &in);

std::vector<std::string> split(const std::string &line, char sep = ',');

double parse_double(const std::string &s);
long long parse_int(const std::string &s);
unsigned long long parse_uint(const std::string &s);

}  // namespace sqrs::csv

#endif
