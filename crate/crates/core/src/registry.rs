//! Name-keyed registries of interchangeable algorithm implementations.
//!
//! Each algorithm family (eigensolvers, quadrature rules, validation checks)
//! exposes a trait object type and a [`Registry`] of constructors, so callers
//! can pick an implementation by name at runtime (for example from a CLI flag).

use crate::error::{Error, Result};

/// Implemented by every trait object that can live in a [`Registry`].
pub trait Named {
    fn name(&self) -> &'static str;
}

type Constructor<T> = fn() -> Box<T>;

pub struct Registry<T: ?Sized> {
    kind: &'static str,
    entries: Vec<(&'static str, Constructor<T>)>,
}

impl<T: ?Sized + Named> Registry<T> {
    pub fn new(kind: &'static str) -> Self {
        Self {
            kind,
            entries: Vec::new(),
        }
    }

    /// Registers a constructor. A later registration under an existing name replaces it.
    pub fn register(&mut self, name: &'static str, ctor: Constructor<T>) -> &mut Self {
        if let Some(slot) = self.entries.iter_mut().find(|(n, _)| *n == name) {
            slot.1 = ctor;
        } else {
            self.entries.push((name, ctor));
        }
        self
    }

    pub fn with(mut self, name: &'static str, ctor: Constructor<T>) -> Self {
        self.register(name, ctor);
        self
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|(n, _)| *n).collect()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.iter().any(|(n, _)| *n == name)
    }

    pub fn create(&self, name: &str) -> Result<Box<T>> {
        self.entries
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, ctor)| ctor())
            .ok_or_else(|| Error::UnknownStrategy {
                kind: self.kind,
                name: name.to_string(),
                available: self.names().join(", "),
            })
    }

    /// Instantiates every registered entry, in registration order.
    pub fn create_all(&self) -> Vec<Box<T>> {
        self.entries.iter().map(|(_, ctor)| ctor()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    trait Greeter: Named {
        fn greet(&self) -> String;
    }

    struct Hello;
    impl Named for Hello {
        fn name(&self) -> &'static str {
            "hello"
        }
    }
    impl Greeter for Hello {
        fn greet(&self) -> String {
            "hello".into()
        }
    }

    struct Shout;
    impl Named for Shout {
        fn name(&self) -> &'static str {
            "hello"
        }
    }
    impl Greeter for Shout {
        fn greet(&self) -> String {
            "HELLO".into()
        }
    }

    #[test]
    fn lookup_and_replace() {
        let mut reg: Registry<dyn Greeter> = Registry::new("greeter");
        reg.register("hello", || Box::new(Hello));
        assert_eq!(reg.create("hello").unwrap().greet(), "hello");
        reg.register("hello", || Box::new(Shout));
        assert_eq!(reg.names(), vec!["hello"]);
        assert_eq!(reg.create("hello").unwrap().greet(), "HELLO");
    }

    #[test]
    fn unknown_name_lists_available() {
        let reg: Registry<dyn Greeter> = Registry::new("greeter").with("hello", || Box::new(Hello));
        match reg.create("nope") {
            Err(Error::UnknownStrategy { available, .. }) => assert_eq!(available, "hello"),
            other => panic!("unexpected {:?}", other.map(|g| g.greet())),
        }
    }
}
