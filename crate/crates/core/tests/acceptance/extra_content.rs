use std::collections::BTreeSet;
use std::path::PathBuf;

use testgen_core::lang::JavaAdapter;
use testgen_core::sanitizer::{detect_extra_content, ExtraContentStats};
use testgen_core::toolchain::TestFile;

use crate::common::Verdict;

const PRODUCTION: &[&str] = &["User", "Order", "Repository", "Calculator"];

struct Labeled {
    name: &'static str,
    /// (file stem, source)
    files: &'static [(&'static str, &'static str)],
    /// additional classes, additional interfaces, overriding, empty placeholders
    expected: [u32; 4],
}

const HEADER: &str = "package com.example;\n\nimport org.junit.jupiter.api.*;\nimport static org.junit.jupiter.api.Assertions.*;\n\n";

const CORPUS: &[Labeled] = &[
    Labeled {
        name: "empty helper TestClass with a javadoc",
        files: &[(
            "ReflectionUtilsTest",
            "class ReflectionUtilsTest {\n    @Test\n    void findsField() {\n        assertNotNull(TestClass.class);\n    }\n\n    /** Helper classes for testing */\n    private static class TestClass {\n        // Simple test class\n    }\n}\n",
        )],
        expected: [1, 0, 0, 1],
    },
    Labeled {
        name: "User redefined with equals and hashCode",
        files: &[(
            "UserServiceTest",
            "class UserServiceTest {\n    @Test\n    void storesUsers() {\n        assertEquals(new User(), new User());\n    }\n\n    static class User {\n        String name;\n        int age;\n\n        @Override\n        public boolean equals(Object o) {\n            return o instanceof User;\n        }\n\n        @Override\n        public int hashCode() {\n            return 1;\n        }\n    }\n}\n",
        )],
        expected: [1, 0, 1, 0],
    },
    Labeled {
        name: "plain test class",
        files: &[("CalculatorTest", "class CalculatorTest {\n    @Test\n    void adds() {\n        assertEquals(2, 1 + 1);\n    }\n}\n")],
        expected: [0, 0, 0, 0],
    },
    Labeled {
        name: "nested callback interface",
        files: &[(
            "EventBusTest",
            "class EventBusTest {\n    interface Callback {\n        void done();\n    }\n\n    @Test\n    void publishes() {\n    }\n}\n",
        )],
        expected: [0, 1, 0, 0],
    },
    Labeled {
        name: "top-level stub after the test class",
        files: &[(
            "MailerTest",
            "class MailerTest {\n    @Test\n    void sends() {\n    }\n}\n\nclass StubTransport {\n    int calls;\n}\n",
        )],
        expected: [1, 0, 0, 0],
    },
    Labeled {
        name: "top-level empty placeholder",
        files: &[("ParserTest", "class ParserTest {\n    @Test\n    void parses() {\n    }\n}\n\nclass Placeholder {\n}\n")],
        expected: [1, 0, 0, 1],
    },
    Labeled {
        name: "@Nested group with tests",
        files: &[(
            "StackTest",
            "class StackTest {\n    @Nested\n    class WhenEmpty {\n        @Test\n        void isEmpty() {\n        }\n    }\n}\n",
        )],
        expected: [0, 0, 0, 0],
    },
    Labeled {
        name: "@Nested group without tests yet",
        files: &[(
            "QueueTest",
            "class QueueTest {\n    @Test\n    void offers() {\n    }\n\n    @Nested\n    class WhenFull {\n    }\n}\n",
        )],
        expected: [0, 0, 0, 0],
    },
    Labeled {
        name: "empty builder inside a @Nested group",
        files: &[(
            "InvoiceTest",
            "class InvoiceTest {\n    @Nested\n    class Totals {\n        @Test\n        void sums() {\n        }\n\n        class Builder {\n        }\n    }\n}\n",
        )],
        expected: [1, 0, 0, 1],
    },
    Labeled {
        name: "top-level Order clashing with production",
        files: &[("CheckoutTest", "class CheckoutTest {\n    @Test\n    void checksOut() {\n    }\n}\n\nclass Order {\n    long id;\n}\n")],
        expected: [1, 0, 1, 0],
    },
    Labeled {
        name: "Repository interface clashing with production",
        files: &[(
            "ServiceTest",
            "class ServiceTest {\n    interface Repository {\n    }\n\n    @Test\n    void loads() {\n    }\n}\n",
        )],
        expected: [0, 1, 1, 0],
    },
    Labeled {
        name: "nested class holding only a comment",
        files: &[(
            "CacheTest",
            "class CacheTest {\n    @Test\n    void evicts() {\n    }\n\n    static class Entry {\n        // filled in later\n    }\n}\n",
        )],
        expected: [1, 0, 0, 1],
    },
    Labeled {
        name: "nested class with one field",
        files: &[(
            "ClockTest",
            "class ClockTest {\n    static class FixedTime {\n        long millis = 5L;\n    }\n\n    @Test\n    void ticks() {\n    }\n}\n",
        )],
        expected: [1, 0, 0, 0],
    },
    Labeled {
        name: "two helpers and an interface",
        files: &[(
            "RouterTest",
            "class RouterTest {\n    static class FakeRequest {\n        String path;\n    }\n\n    static class FakeResponse {\n        int status;\n    }\n\n    interface Handler {\n        void handle(FakeRequest r);\n    }\n\n    @Test\n    void routes() {\n    }\n}\n",
        )],
        expected: [2, 1, 0, 0],
    },
    Labeled {
        name: "helpers spread over two files",
        files: &[
            ("AlphaTest", "class AlphaTest {\n    static class Probe {\n        int hits;\n    }\n\n    @Test\n    void a() {\n    }\n}\n"),
            ("BetaTest", "class BetaTest {\n    @Test\n    void b() {\n    }\n}\n\nclass Calculator {\n}\n"),
        ],
        expected: [2, 0, 1, 1],
    },
    Labeled {
        name: "helper enum",
        files: &[(
            "SchedulerTest",
            "class SchedulerTest {\n    enum Speed {\n        FAST,\n        SLOW\n    }\n\n    @Test\n    void schedules() {\n    }\n}\n",
        )],
        expected: [1, 0, 0, 0],
    },
    Labeled {
        name: "helper record",
        files: &[(
            "GeometryTest",
            "class GeometryTest {\n    record Point(int x, int y) {\n    }\n\n    @Test\n    void measures() {\n    }\n}\n",
        )],
        expected: [1, 0, 0, 0],
    },
    Labeled {
        name: "lower-case name is not a clash",
        files: &[("AccountTest", "class AccountTest {\n    @Test\n    void opens() {\n    }\n\n    static class user {\n    }\n}\n")],
        expected: [1, 0, 0, 1],
    },
    Labeled {
        name: "test class named differently from its file",
        files: &[("ListTest", "class ListTests {\n    @Test\n    void grows() {\n    }\n}\n")],
        expected: [0, 0, 0, 0],
    },
    Labeled {
        name: "anonymous class inside a test",
        files: &[(
            "ExecutorTest",
            "class ExecutorTest {\n    @Test\n    void runs() {\n        Runnable r = new Runnable() {\n            public void run() {\n            }\n        };\n        r.run();\n    }\n}\n",
        )],
        expected: [0, 0, 0, 0],
    },
    Labeled {
        name: "abstract fixture base",
        files: &[(
            "ShapeTest",
            "class ShapeTest {\n    abstract static class BaseFixture {\n        abstract int sides();\n    }\n\n    @Test\n    void counts() {\n    }\n}\n",
        )],
        expected: [1, 0, 0, 0],
    },
    Labeled {
        name: "generic box helper and extra test holder",
        files: &[(
            "ContainerTest",
            "class ContainerTest {\n    static class Box<T> {\n        T value;\n    }\n\n    static class MoreTests {\n        @Test\n        void extra() {\n        }\n    }\n\n    @Test\n    void holds() {\n    }\n}\n",
        )],
        expected: [1, 0, 0, 0],
    },
];

fn as_array(s: &ExtraContentStats) -> [u32; 4] {
    [
        s.additional_classes,
        s.additional_interfaces,
        s.overriding_classes,
        s.empty_placeholder_classes,
    ]
}

pub fn check() -> anyhow::Result<Verdict> {
    let adapter = JavaAdapter::default();
    let production: BTreeSet<String> = PRODUCTION.iter().map(|s| s.to_string()).collect();
    let mut agree = 0;
    let mut testclass = [0; 4];
    let mut disagreements = Vec::new();
    for (i, fx) in CORPUS.iter().enumerate() {
        let files: Vec<TestFile> = fx
            .files
            .iter()
            .map(|(stem, body)| TestFile {
                path: PathBuf::from(format!("src/test/java/com/example/{stem}.java")),
                source: format!("{HEADER}{body}"),
            })
            .collect();
        let got = as_array(&detect_extra_content(&files, &production, &adapter));
        if i == 0 {
            testclass = got;
        }
        if got == fx.expected {
            agree += 1;
        } else {
            disagreements.push(format!("{}: got {got:?}, labeled {:?}", fx.name, fx.expected));
        }
    }
    let mut detail = format!(
        "{agree}/{} fixtures agree (2 reference excerpts + {} hand-labeled); TestClass: {} additional, {} empty",
        CORPUS.len(),
        CORPUS.len() - 2,
        testclass[0],
        testclass[3]
    );
    for d in disagreements.iter().take(3) {
        detail.push_str(&format!("; {d}"));
    }
    Ok(Verdict::new(
        agree == CORPUS.len() && testclass[0] == 1 && testclass[3] == 1,
        detail,
    ))
}
