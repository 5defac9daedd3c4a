// Copyright 2026 QubitOS Contributors
// SPDX-License-Identifier: Apache-2.0
fn main() {}
