use std::collections::BTreeSet;
use std::ops::Add;

use serde::{Deserialize, Serialize};

use crate::lang::{LanguageAdapter, TypeKind, TypeOutline};
use crate::toolchain::TestFile;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtraContentStats {
    pub additional_classes: u32,
    pub additional_interfaces: u32,
    /// Extra types whose simple name collides with a production type.
    pub overriding_classes: u32,
    /// Extra classes (not records or enums) whose body holds nothing but
    /// comments.
    pub empty_placeholder_classes: u32,
}

impl Add for ExtraContentStats {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            additional_classes: self.additional_classes + o.additional_classes,
            additional_interfaces: self.additional_interfaces + o.additional_interfaces,
            overriding_classes: self.overriding_classes + o.overriding_classes,
            empty_placeholder_classes: self.empty_placeholder_classes
                + o.empty_placeholder_classes,
        }
    }
}

fn classify(
    t: &TypeOutline,
    production: &BTreeSet<String>,
    marker: &str,
    stats: &mut ExtraContentStats,
) {
    if t.is_test_container(marker) {
        for n in &t.nested {
            classify(n, production, marker, stats);
        }
        return;
    }
    match t.kind {
        TypeKind::Interface => stats.additional_interfaces += 1,
        kind => {
            stats.additional_classes += 1;
            if kind == TypeKind::Class && !t.has_members {
                stats.empty_placeholder_classes += 1;
            }
        }
    }
    if production.contains(&t.name) {
        stats.overriding_classes += 1;
    }
}

/// Counts non-test type declarations in generated files. The expected test
/// class of each file (named after the file) and test containers are never
/// counted; their nested non-test types are.
pub fn detect_extra_content(
    files: &[TestFile],
    production_types: &BTreeSet<String>,
    adapter: &dyn LanguageAdapter,
) -> ExtraContentStats {
    let marker = adapter.nested_test_marker();
    let mut stats = ExtraContentStats::default();
    for f in files {
        let stem = f.stem();
        let outline = adapter.outline(&f.source);
        for t in &outline.types {
            if t.name == stem {
                for n in &t.nested {
                    classify(n, production_types, marker, &mut stats);
                }
            } else {
                classify(t, production_types, marker, &mut stats);
            }
        }
    }
    stats
}
