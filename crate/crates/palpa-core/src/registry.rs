//! Name-keyed registries of trait objects.
//!
//! Interchangeable algorithms (mesh codecs, map recipes, contact resolvers,
//! cone exporters) implement a common trait and are looked up by name at
//! runtime, typically from a config file or a CLI flag.

use std::fmt;

/// Implemented by every registrable strategy.
pub trait Named {
    fn name(&self) -> &'static str;
}

/// An ordered, name-keyed set of strategies.
pub struct Registry<T: ?Sized + Named> {
    entries: Vec<Box<T>>,
}

impl<T: ?Sized + Named> Registry<T> {
    pub fn new() -> Self {
        Self {
            entries: Vec::new(),
        }
    }

    /// Adds a strategy, replacing any previous entry with the same name.
    pub fn register(&mut self, entry: Box<T>) {
        if let Some(slot) = self.entries.iter_mut().find(|e| e.name() == entry.name()) {
            *slot = entry;
        } else {
            self.entries.push(entry);
        }
    }

    pub fn with(mut self, entry: Box<T>) -> Self {
        self.register(entry);
        self
    }

    pub fn get(&self, name: &str) -> Option<&T> {
        self.entries
            .iter()
            .find(|e| e.name().eq_ignore_ascii_case(name))
            .map(|b| b.as_ref())
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|e| e.name()).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl<T: ?Sized + Named> Default for Registry<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: ?Sized + Named> fmt::Debug for Registry<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.names()).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    trait Greeter: Named {
        fn greet(&self) -> String;
    }

    struct Hello(&'static str);

    impl Named for Hello {
        fn name(&self) -> &'static str {
            "hello"
        }
    }

    impl Greeter for Hello {
        fn greet(&self) -> String {
            self.0.to_string()
        }
    }

    #[test]
    fn register_replaces_by_name() {
        let reg = Registry::<dyn Greeter>::new()
            .with(Box::new(Hello("a")))
            .with(Box::new(Hello("b")));
        assert_eq!(reg.len(), 1);
        assert_eq!(reg.get("HELLO").unwrap().greet(), "b");
        assert!(reg.get("bye").is_none());
    }
}
