// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <string>
#include <string_view>

namespace finesure {

std::string_view trim(std::string_view s);
std::string to_lower_ascii(std::string_view s);
bool is_blank(std::string_view s);

// Lowercase hex SHA-256 of the bytes.
std::string sha256_hex(std::string_view data);

// Fixed-point rendering, e.g. format_fixed(1.0/3, 4) == "0.3333".
std::string format_fixed(double value, int decimals);
// Percent with one decimal, e.g. format_percent(0.9) == "90.0%".
std::string format_percent(double ratio);

}  // namespace finesure
