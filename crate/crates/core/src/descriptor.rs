use std::fmt;
use std::sync::Arc;

/// The built-in collection shapes a domain can be built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CollectionKind {
    List,
    Vector,
    Array,
    Set,
}

impl CollectionKind {
    pub fn name(self) -> &'static str {
        match self {
            CollectionKind::List => "List",
            CollectionKind::Vector => "Vector",
            CollectionKind::Array => "Array",
            CollectionKind::Set => "Set",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "List" => CollectionKind::List,
            "Vector" => CollectionKind::Vector,
            "Array" => CollectionKind::Array,
            "Set" => CollectionKind::Set,
            _ => return None,
        })
    }
}

/// Structural description of a domain type.
///
/// Continuation domains have no node of their own: [`DomainDescriptor::cont`]
/// builds the equivalent nested function shape, so every continuation is
/// matched exactly like the function it denotes.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum DomainDescriptor {
    Stream(Arc<DomainDescriptor>),
    Deferred(Arc<DomainDescriptor>),
    Fn(Arc<DomainDescriptor>, Arc<DomainDescriptor>),
    Trampoline(Arc<DomainDescriptor>),
    Collection(CollectionKind, Arc<DomainDescriptor>),
    /// `(Error -> inner) -> inner`
    Error(Arc<DomainDescriptor>),
    Scalar(Arc<str>),
    Unit,
}

pub type Desc = DomainDescriptor;

impl DomainDescriptor {
    pub fn scalar(name: &str) -> Self {
        DomainDescriptor::Scalar(Arc::from(name))
    }

    pub fn any() -> Self {
        Self::scalar("Any")
    }

    pub fn int() -> Self {
        Self::scalar("Int")
    }

    pub fn string() -> Self {
        Self::scalar("String")
    }

    pub fn stream(elem: Self) -> Self {
        DomainDescriptor::Stream(Arc::new(elem))
    }

    pub fn deferred(elem: Self) -> Self {
        DomainDescriptor::Deferred(Arc::new(elem))
    }

    pub fn func(param: Self, result: Self) -> Self {
        DomainDescriptor::Fn(Arc::new(param), Arc::new(result))
    }

    pub fn trampoline(elem: Self) -> Self {
        DomainDescriptor::Trampoline(Arc::new(elem))
    }

    pub fn collection(kind: CollectionKind, elem: Self) -> Self {
        DomainDescriptor::Collection(kind, Arc::new(elem))
    }

    pub fn list(elem: Self) -> Self {
        Self::collection(CollectionKind::List, elem)
    }

    pub fn set(elem: Self) -> Self {
        Self::collection(CollectionKind::Set, elem)
    }

    pub fn error(inner: Self) -> Self {
        DomainDescriptor::Error(Arc::new(inner))
    }

    /// `Cont(answer, value)`, stored as `Fn(Fn(value, answer), answer)`.
    pub fn cont(answer: Self, value: Self) -> Self {
        Self::func(Self::func(value, answer.clone()), answer)
    }

    /// The answer domain of every task: `Error(Trampoline(Unit))`.
    pub fn task_answer() -> Self {
        Self::error(Self::trampoline(DomainDescriptor::Unit))
    }

    /// `Task<A> = Cont(Cont(Trampoline<Unit>, Error), A)`.
    pub fn task(value: Self) -> Self {
        Self::cont(Self::task_answer(), value)
    }

    /// Splits `Fn(Fn(v, a), a)` into `(a, v)`.
    pub fn as_cont(&self) -> Option<(&DomainDescriptor, &DomainDescriptor)> {
        match self {
            DomainDescriptor::Fn(param, answer) => match param.as_ref() {
                DomainDescriptor::Fn(value, inner) if inner == answer => Some((answer, value)),
                _ => None,
            },
            _ => None,
        }
    }

    /// Result of a CPS function `Fn(Fn(_, _), r)`, whether or not the answer
    /// type is preserved.
    pub fn cps_result(&self) -> Option<&DomainDescriptor> {
        match self {
            DomainDescriptor::Fn(param, result)
                if matches!(param.as_ref(), DomainDescriptor::Fn(..)) =>
            {
                Some(result)
            }
            _ => None,
        }
    }

    pub fn as_task(&self) -> Option<&DomainDescriptor> {
        match self.as_cont() {
            Some((answer, value)) if *answer == Self::task_answer() => Some(value),
            _ => None,
        }
    }

    /// The innermost domain reached by following function results and
    /// error layers.
    pub fn leaf(&self) -> &DomainDescriptor {
        let mut current = self;
        loop {
            match current {
                DomainDescriptor::Fn(_, result) => current = result,
                DomainDescriptor::Error(inner) => current = inner,
                other => return other,
            }
        }
    }

    pub fn has_trampoline_leaf(&self) -> bool {
        matches!(self.leaf(), DomainDescriptor::Trampoline(_))
    }

    /// True when some layer on the result path is an error layer.
    pub fn has_error_layer(&self) -> bool {
        let mut current = self;
        loop {
            match current {
                DomainDescriptor::Fn(_, result) => current = result,
                DomainDescriptor::Error(_) => return true,
                _ => return false,
            }
        }
    }

    pub fn is_function(&self) -> bool {
        matches!(self, DomainDescriptor::Fn(..))
    }

    pub fn is_any(&self) -> bool {
        matches!(self, DomainDescriptor::Scalar(name) if name.as_ref() == "Any")
    }

    /// Structural equality where `Any` on either side matches anything.
    pub fn compatible(&self, other: &DomainDescriptor) -> bool {
        use DomainDescriptor as D;
        if self.is_any() || other.is_any() {
            return true;
        }
        match (self, other) {
            (D::Stream(a), D::Stream(b))
            | (D::Deferred(a), D::Deferred(b))
            | (D::Trampoline(a), D::Trampoline(b))
            | (D::Error(a), D::Error(b)) => a.compatible(b),
            (D::Fn(p1, r1), D::Fn(p2, r2)) => p1.compatible(p2) && r1.compatible(r2),
            (D::Collection(k1, a), D::Collection(k2, b)) => k1 == k2 && a.compatible(b),
            (D::Scalar(a), D::Scalar(b)) => a == b,
            (D::Unit, D::Unit) => true,
            _ => false,
        }
    }
}

fn write_arrow_operand(f: &mut fmt::Formatter<'_>, d: &DomainDescriptor) -> fmt::Result {
    if d.is_function() && d.as_cont().is_none() {
        write!(f, "({d})")
    } else {
        write!(f, "{d}")
    }
}

impl fmt::Display for DomainDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use DomainDescriptor as D;
        if let Some(value) = self.as_task() {
            return write!(f, "Task[{value}]");
        }
        if let Some((answer, value)) = self.as_cont() {
            return write!(f, "Cont[{answer}, {value}]");
        }
        match self {
            D::Stream(e) => write!(f, "Stream[{e}]"),
            D::Deferred(e) => write!(f, "Deferred[{e}]"),
            D::Trampoline(e) => write!(f, "Trampoline[{e}]"),
            D::Error(e) => write!(f, "Error[{e}]"),
            D::Collection(kind, e) => write!(f, "{}[{e}]", kind.name()),
            D::Scalar(name) => f.write_str(name),
            D::Unit => f.write_str("Unit"),
            D::Fn(param, result) => {
                write_arrow_operand(f, param)?;
                write!(f, " => {result}")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cont_is_nested_function() {
        let c = Desc::cont(Desc::stream(Desc::string()), Desc::int());
        let f = Desc::func(
            Desc::func(Desc::int(), Desc::stream(Desc::string())),
            Desc::stream(Desc::string()),
        );
        assert_eq!(c, f);
        assert_eq!(c.to_string(), "Cont[Stream[String], Int]");
    }

    #[test]
    fn task_shape() {
        let t = Desc::task(Desc::int());
        assert_eq!(t.as_task(), Some(&Desc::int()));
        assert!(t.has_trampoline_leaf());
        assert!(t.has_error_layer());
        assert_eq!(t.to_string(), "Task[Int]");
    }

    #[test]
    fn curried_display() {
        let d = Desc::func(
            Desc::scalar("Double"),
            Desc::func(
                Desc::int(),
                Desc::func(
                    Desc::collection(CollectionKind::Vector, Desc::any()),
                    Desc::string(),
                ),
            ),
        );
        assert_eq!(d.to_string(), "Double => Int => Vector[Any] => String");
        let h = Desc::func(
            Desc::func(Desc::int(), Desc::int()),
            Desc::list(Desc::int()),
        );
        assert_eq!(h.to_string(), "(Int => Int) => List[Int]");
    }
}
